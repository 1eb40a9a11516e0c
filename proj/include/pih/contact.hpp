#pragma once

// Vertical contact model and impedance-controlled insertion.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pih/world.hpp"

namespace pih {

struct ContactParams {
    double surface_stiffness = 10.0;  // N/mm
    double press_depth = 2.5;         // mm
    double capture_radius = 0.2;      // mm

    void validate() const {
        if (!(surface_stiffness > 0.0) || !(press_depth > 0.0) || !(capture_radius > 0.0))
            throw ConfigError("contact parameters must be positive");
    }
};

/// Closed test: a peg exactly on the capture circle drops in.
inline bool captured(Vec2mm offset, const ContactParams& cp) { return offset.norm() <= cp.capture_radius; }

/// Downward force read by the wrist sensor while the peg is pressed onto
/// the surface.
inline double contact_force(const WorldState& world, const ContactParams& cp) {
    return captured(world.peg_offset, cp) ? 0.0 : cp.surface_stiffness * cp.press_depth;
}

/// Translational x, y, z followed by the three rotational entries, which the
/// planar model carries but never uses.
using Axis6 = std::array<double, 6>;

struct ImpedanceParams {
    Axis6 damping{50, 50, 50, 1, 1, 1};             // N s/mm, N mm s/rad
    Axis6 stiffness{100, 100, 100, 100, 100, 100};  // N/mm, N mm/rad
    double dt = 0.01;
    double target_depth = 10.0;  // mm below the surface counts as inserted
    double push_force = 20.0;    // constant downward command, N
    double timeout = 90.0;
    Vec2mm lateral_force{};  // external lateral disturbance, N
    double max_depth = 75.0;  // peg length

    void validate() const {
        for (int i = 0; i < 6; ++i) {
            if (!(damping[i] > 0.0))
                throw ConfigError("impedance damping entries must be positive");
            if (!(stiffness[i] >= 0.0))
                throw ConfigError("impedance stiffness entries must be non-negative");
        }
        if (!(dt > 0.0) || !(target_depth > 0.0) || !(timeout > 0.0) || !(max_depth >= target_depth))
            throw ConfigError("impedance dt, target_depth, timeout must be positive and target_depth <= max_depth");
    }
};

/// Explicit Euler step of a first-order admittance c x' = f - k (x - x_ref).
inline double admittance_step(double x, double x_ref, double f_ext, double k, double c, double dt) {
    return x + dt * (f_ext - k * (x - x_ref)) / c;
}

enum class InsertionTermination { Inserted, JammedTimeout };

inline std::string_view to_string(InsertionTermination t) {
    return t == InsertionTermination::Inserted ? "inserted" : "jammed_timeout";
}

struct InsertionSample {
    double t;
    double depth;
    double force_z;
    double wall_force;
};

struct InsertionOutcome {
    bool success = false;
    double depth = 0.0;
    double elapsed = 0.0;
    InsertionTermination termination = InsertionTermination::JammedTimeout;
    std::vector<InsertionSample> trace;
};

/// Descends under a constant push through the spring-damper admittance
/// until `target_depth` is reached or `timeout` elapses.  Lateral motion is
/// confined by the hole wall at `clearance`.
inline InsertionOutcome impedance_insert(WorldState& world, const ImpedanceParams& p, const ContactParams& cp,
                                         double clearance, bool keep_trace = false) {
    p.validate();
    if (!captured(world.peg_offset, cp))
        throw std::invalid_argument("insertion requires the peg to be captured by the hole");

    InsertionOutcome out;
    const Vec2mm lateral_ref = world.peg_offset;
    const double depth_ref = p.target_depth;
    double depth = std::max(0.0, -world.peg_z);
    Vec2mm lateral = world.peg_offset;
    const auto max_steps = static_cast<long>(std::floor(p.timeout / p.dt + 1e-9));

    for (long n = 1;; ++n) {
        if (n > max_steps) {
            out.termination = InsertionTermination::JammedTimeout;
            break;
        }
        const double fz = p.push_force;
        depth = admittance_step(depth, depth_ref, fz, p.stiffness[2], p.damping[2], p.dt);
        lateral.x = admittance_step(lateral.x, lateral_ref.x, p.lateral_force.x, p.stiffness[0], p.damping[0], p.dt);
        lateral.y = admittance_step(lateral.y, lateral_ref.y, p.lateral_force.y, p.stiffness[1], p.damping[1], p.dt);

        double wall = 0.0;
        const double r = lateral.norm();
        if (depth > 0.0 && r > clearance) {
            // The wall takes up whatever net lateral force pushes past it.
            const double nx = lateral.x / r, ny = lateral.y / r;
            const double fx = p.lateral_force.x - p.stiffness[0] * (lateral.x - lateral_ref.x);
            const double fy = p.lateral_force.y - p.stiffness[1] * (lateral.y - lateral_ref.y);
            wall = std::max(0.0, fx * nx + fy * ny);
            lateral = (clearance / r) * lateral;
        }
        depth = std::clamp(depth, 0.0, p.max_depth);

        world.peg_offset = lateral;
        world.peg_z = -depth;
        world.contact_force_z = 0.0;
        world.advance(p.dt);
        out.elapsed = static_cast<double>(n) * p.dt;
        if (keep_trace)
            out.trace.push_back({out.elapsed, depth, fz, wall});
        if (depth >= p.target_depth) {
            out.termination = InsertionTermination::Inserted;
            break;
        }
    }
    out.depth = depth;
    out.success = out.termination == InsertionTermination::Inserted;
    return out;
}

inline void write_csv(std::ostream& os, const InsertionOutcome& o) {
    os << "t,depth,force_z,wall_force\n";
    for (const auto& s : o.trace)
        os << s.t << "," << s.depth << "," << s.force_z << "," << s.wall_force << "\n";
}

}  // namespace pih

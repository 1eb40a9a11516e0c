#pragma once

// Archimedean spiral search.  The angle grows by delta_theta per step and
// the radius by delta_r per full turn; the peg presses on the surface and
// stops as soon as the downward force drops below f_max.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pih/contact.hpp"
#include "pih/world.hpp"

namespace pih {

struct SpiralParams {
    double r_init = 0.3;            // mm
    double r_max = 7.0;             // mm
    double delta_theta_deg = 12.5;  // per step
    double delta_r = 0.3;           // mm per full turn
    double f_max = 20.0;            // N
    double step_time = 0.1;         // simulated seconds per step
    /// Sample the force continuously while moving between spiral points
    /// rather than only on arrival.
    bool monitor_along_path = true;

    void validate() const {
        if (!(r_init > 0.0) || !(r_max >= r_init))
            throw ConfigError("spiral radii must satisfy 0 < r_init <= r_max");
        if (!(delta_theta_deg > 0.0) || !(delta_r > 0.0) || !(f_max > 0.0) || !(step_time >= 0.0))
            throw ConfigError("spiral increments, f_max and step_time must be positive");
    }

    /// Last spiral point index whose radius stays within r_max.
    int last_point() const {
        return static_cast<int>(std::floor(360.0 * (r_max - r_init) / (delta_r * delta_theta_deg) + 1e-9));
    }
};

inline double spiral_radius_at(double theta_deg, const SpiralParams& p) {
    return p.r_init + p.delta_r * theta_deg / 360.0;
}

/// Point at an arbitrary angle, in the spiral frame.
inline Vec2mm spiral_point_at(double theta_deg, const SpiralParams& p) {
    const double r = spiral_radius_at(theta_deg, p);
    const double th = theta_deg * M_PI / 180.0;
    return {r * std::cos(th), r * std::sin(th)};
}

inline Vec2mm spiral_point(int k, const SpiralParams& p) {
    return spiral_point_at(static_cast<double>(k) * p.delta_theta_deg, p);
}

enum class SpiralTermination { ForceDrop, RExceeded, WorkspaceAbort, Budget };

inline std::string_view to_string(SpiralTermination t) {
    switch (t) {
    case SpiralTermination::ForceDrop: return "force_drop";
    case SpiralTermination::RExceeded: return "r_exceeded";
    case SpiralTermination::WorkspaceAbort: return "workspace_abort";
    case SpiralTermination::Budget: return "budget_exceeded";
    }
    return "?";
}

struct SpiralSample {
    int step = 0;  // 0 is the start position, step s visits spiral point s - 1
    int k = -1;
    double theta_deg = 0.0;
    double r = 0.0;
    Vec2mm offset;  // peg minus hole
    double force = 0.0;
};

struct SpiralOutcome {
    bool found = false;
    int steps = 0;
    Vec2mm final_offset;
    SpiralTermination termination = SpiralTermination::RExceeded;
    std::vector<SpiralSample> trace;
};

/// Earliest fraction s in [0,1] at which a + s (b - a) is captured.
inline std::optional<double> first_capture(Vec2mm a, Vec2mm b, const ContactParams& cp) {
    if (captured(a, cp))
        return 0.0;
    const Vec2mm d = b - a;
    const double A = d.x * d.x + d.y * d.y;
    if (A == 0.0)
        return std::nullopt;
    const double B = 2.0 * (a.x * d.x + a.y * d.y);
    const double C = a.x * a.x + a.y * a.y - cp.capture_radius * cp.capture_radius;
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0)
        return std::nullopt;
    const double root = std::sqrt(disc);
    const double s_in = (-B - root) / (2.0 * A);
    const double s_out = (-B + root) / (2.0 * A);
    if (s_in > 1.0 || s_out < 0.0)
        return std::nullopt;
    // Rounding can leave the analytic entry point a hair outside the
    // circle; walk toward the chord middle until the closed test holds.
    double lo = std::max(0.0, s_in);
    const double hi = std::min(1.0, 0.5 * (s_in + s_out));
    if (captured(a + lo * d, cp))
        return lo;
    if (!captured(a + hi * d, cp))
        return std::nullopt;
    double upper = hi;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + upper);
        if (captured(a + mid * d, cp))
            upper = mid;
        else
            lo = mid;
    }
    return upper;
}

/// Presses at the start position, then visits spiral points k = 0, 1, ...
/// centered on it.  `deadline` is an absolute simulated time.
inline SpiralOutcome run_spiral(WorldState& world, const ContactParams& cp, const SpiralParams& p,
                                const WorldConfig& cfg = {},
                                double deadline = std::numeric_limits<double>::infinity(),
                                bool keep_trace = true) {
    p.validate();
    cp.validate();
    SpiralOutcome out;
    const Vec2mm origin = world.peg_offset;
    world.peg_z = 0.0;

    auto record = [&](int step, double force) {
        world.contact_force_z = force;
        if (keep_trace) {
            const int k = step - 1;
            const double theta = k < 0 ? 0.0 : k * p.delta_theta_deg;
            out.trace.push_back({step, k, theta, k < 0 ? 0.0 : spiral_radius_at(theta, p), world.peg_offset, force});
        }
    };

    double force = contact_force(world, cp);
    record(0, force);
    if (force < p.f_max) {
        out.found = true;
        out.termination = SpiralTermination::ForceDrop;
        out.final_offset = world.peg_offset;
        return out;
    }

    for (int k = 0;; ++k) {
        const double theta = k * p.delta_theta_deg;
        if (spiral_radius_at(theta, p) > p.r_max) {
            out.termination = SpiralTermination::RExceeded;
            break;
        }
        const Vec2mm target = origin + spiral_point(k, p);
        if (!cfg.inside_workspace(target)) {
            out.termination = SpiralTermination::WorkspaceAbort;
            break;
        }
        if (world.sim_time + p.step_time > deadline) {
            world.advance(std::max(0.0, deadline - world.sim_time));
            out.termination = SpiralTermination::Budget;
            break;
        }
        const Vec2mm from = world.peg_offset;
        world.peg_offset = target;
        if (p.monitor_along_path)
            if (auto s = first_capture(from, target, cp))
                world.peg_offset = from + *s * (target - from);
        world.advance(p.step_time);
        out.steps = k + 1;
        force = contact_force(world, cp);
        record(out.steps, force);
        if (force < p.f_max) {
            out.found = true;
            out.termination = SpiralTermination::ForceDrop;
            break;
        }
    }
    out.final_offset = world.peg_offset;
    return out;
}

inline void write_jsonl(std::ostream& os, const SpiralOutcome& o, std::uint64_t episode = 0) {
    for (const auto& s : o.trace)
        os << nlohmann::json{{"episode", episode}, {"step", s.step}, {"k", s.k},         {"theta", s.theta_deg},
                             {"r", s.r},           {"x", s.offset.x}, {"y", s.offset.y}, {"force", s.force}}
                  .dump()
           << "\n";
}

}  // namespace pih

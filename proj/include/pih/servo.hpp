#pragma once

// Quadrant-based iterative visual servoing.  Only the per-axis signs of a
// prediction move the peg; the step length follows a linearly decaying
// schedule.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pih/camera.hpp"
#include "pih/predictor.hpp"
#include "pih/rng.hpp"
#include "pih/world.hpp"

namespace pih {

struct ServoParams {
    double max_step = 10.0;  // A, mm
    int horizon = 10;        // n
    int iterations = 5;      // n_run

    void validate() const {
        if (!(max_step > 0.0))
            throw ConfigError("servo max_step must be positive");
        if (horizon < 1 || iterations < 0 || iterations >= horizon)
            throw ConfigError("servo iterations must satisfy 0 <= n_run < n");
    }
};

/// Step length at iteration t: A (n - t) / n.
inline double lambda_at(int t, const ServoParams& p) {
    if (t < 0 || t > p.horizon)
        throw std::out_of_range("servo iteration outside [0, n]");
    return p.max_step * static_cast<double>(p.horizon - t) / static_cast<double>(p.horizon);
}

/// One update: the peg moves lambda[t] toward the predicted quadrant on
/// each axis.  A zero prediction component holds that axis.
inline Vec2mm servo_step(Vec2mm offset, Vec2px prediction, int t, const ServoParams& p) {
    if (t >= p.horizon)
        throw std::out_of_range("servo step requires t < n");
    const double lambda = lambda_at(t, p);
    return offset - lambda * Vec2mm{-sgn(prediction.x), -sgn(prediction.y)};
}

struct ServoRecord {
    int t = 0;
    Vec2px prediction;
    std::optional<Quadrant> quadrant;
    double lambda = 0.0;
    Vec2mm step;
    Vec2mm offset_after;
    double latency = 0.0;
    double sim_time = 0.0;  // clock after the move
};

enum class ServoAbort { None, Workspace, Budget };

inline std::string_view to_string(ServoAbort a) {
    switch (a) {
    case ServoAbort::None: return "none";
    case ServoAbort::Workspace: return "workspace_abort";
    case ServoAbort::Budget: return "budget_exceeded";
    }
    return "?";
}

struct ServoTrace {
    std::vector<ServoRecord> records;
    ServoAbort abort = ServoAbort::None;
};

/// Everything that only depends on motion, i.e. not on the raw predicted
/// numbers.  Two traces with equal signs must agree here exactly.
inline bool same_motion(const ServoTrace& a, const ServoTrace& b) {
    if (a.abort != b.abort || a.records.size() != b.records.size())
        return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& x = a.records[i];
        const auto& y = b.records[i];
        if (x.t != y.t || x.quadrant != y.quadrant || x.lambda != y.lambda || !(x.step == y.step) ||
            !(x.offset_after == y.offset_after) || x.latency != y.latency || x.sim_time != y.sim_time ||
            sgn(x.prediction.x) != sgn(y.prediction.x) || sgn(x.prediction.y) != sgn(y.prediction.y))
            return false;
    }
    return true;
}

inline void write_jsonl(std::ostream& os, const ServoTrace& trace, std::uint64_t episode = 0) {
    for (const auto& r : trace.records) {
        os << nlohmann::json{{"episode", episode},
                             {"t", r.t},
                             {"pred_x", r.prediction.x},
                             {"pred_y", r.prediction.y},
                             {"quadrant", r.quadrant ? std::string(to_string(*r.quadrant)) : std::string("none")},
                             {"lambda", r.lambda},
                             {"step_x", r.step.x},
                             {"step_y", r.step.y},
                             {"offset_x", r.offset_after.x},
                             {"offset_y", r.offset_after.y},
                             {"sim_time", r.sim_time}}
                  .dump()
           << "\n";
    }
}

/// Camera scene used to render observations during servoing.
struct ServoScene {
    WorldConfig world{};
    GripperMask mask{};
    GrayImage background{};
    CameraConfig camera{};
    int hole_darkness = 30;
};

inline ServoScene default_scene(const WorldConfig& world = {}, const CameraConfig& camera = {}) {
    return {world, make_procedural_mask(world.peg, world.scale), GrayImage(kViewSize, kViewSize, 200), camera, 30};
}

/// Builds what the predictor sees for the current world state.
inline Observation observe(const WorldState& world, const ServoScene& scene, bool with_image, int t,
                           GrayImage& image_storage) {
    Observation obs;
    try {
        obs.true_label = ground_truth_label(world, scene.world.scale);
    } catch (const std::out_of_range&) {
        obs.true_label.reset();
    }
    if (with_image) {
        RenderParams rp;
        rp.hole_diameter_px = scene.world.hole.diameter * scene.world.scale.px_per_mm;
        rp.hole_darkness = scene.hole_darkness;
        rp.noise_sigma = scene.camera.noise_sigma;
        rp.seed = derive_seed(world.rng_seed, {0xCA11, static_cast<std::uint64_t>(t)});
        image_storage = render_world_view(world, scene.world.scale, scene.background, scene.mask, rp, scene.camera);
        obs.image = &image_storage;
    }
    return obs;
}

/// Runs n_run render -> predict -> move iterations.  Predictor failures
/// propagate as PredictorError.  `deadline` is an absolute simulated time.
inline ServoTrace run_servoing(WorldState& world, Predictor& predictor, const ServoScene& scene,
                               const ServoParams& params, double per_move_time = 2.0,
                               double deadline = std::numeric_limits<double>::infinity()) {
    params.validate();
    ServoTrace trace;
    GrayImage image;
    for (int t = 0; t < params.iterations; ++t) {
        const Observation obs = observe(world, scene, predictor.needs_image(), t, image);
        const Prediction pred = predictor.predict(obs);
        if (world.sim_time + pred.latency + per_move_time > deadline) {
            world.advance(std::max(0.0, deadline - world.sim_time));
            trace.abort = ServoAbort::Budget;
            return trace;
        }
        const Vec2mm next = servo_step(world.peg_offset, pred.xy, t, params);
        if (!scene.world.inside_workspace(next)) {
            world.advance(pred.latency);
            trace.abort = ServoAbort::Workspace;
            return trace;
        }
        world.advance(pred.latency + per_move_time);
        ServoRecord rec;
        rec.t = t;
        rec.prediction = pred.xy;
        rec.quadrant = quadrant_of(pred.xy);
        rec.lambda = lambda_at(t, params);
        rec.step = next - world.peg_offset;
        rec.offset_after = next;
        rec.latency = pred.latency;
        world.peg_offset = next;
        rec.sim_time = world.sim_time;
        trace.records.push_back(rec);
    }
    return trace;
}

}  // namespace pih

#pragma once

// One peg-in-hole episode: optional visual servoing, spiral search, then
// impedance insertion, all on a single seeded world and one time budget.

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pih/backgrounds.hpp"
#include "pih/camera.hpp"
#include "pih/contact.hpp"
#include "pih/external.hpp"
#include "pih/predictor.hpp"
#include "pih/rng.hpp"
#include "pih/servo.hpp"
#include "pih/spiral.hpp"
#include "pih/world.hpp"

namespace pih {

enum class PredictorKind { Oracle, Stochastic, External };

struct PredictorConfig {
    PredictorKind kind = PredictorKind::Oracle;
    PredictorStats stats{};
    double latency = 1.0;  // simulated seconds per prediction
    Interval position_range{-66.0, 66.0};
    std::vector<std::string> command;  // external: child process argv
    std::string host;                  // external: TCP endpoint instead of a child
    int port = 0;
    ExternalOptions external{};
};

inline PredictorConfig predictor_config_from_json(const nlohmann::json& j) {
    PredictorConfig c;
    const auto kind = json_get<std::string>(j, "kind", "oracle");
    if (kind == "oracle")
        c.kind = PredictorKind::Oracle;
    else if (kind == "stochastic")
        c.kind = PredictorKind::Stochastic;
    else if (kind == "external")
        c.kind = PredictorKind::External;
    else
        throw ConfigError("unknown predictor kind: " + kind);
    c.latency = json_get(j, "latency", c.latency);
    if (auto it = j.find("preset"); it != j.end()) {
        // ["Image", "Light plain"]: a published training/testing pair.
        if (!it->is_array() || it->size() != 2)
            throw ConfigError("preset is [training, testing]");
        c.stats = published_stats((*it)[0].get<std::string>(), (*it)[1].get<std::string>());
    }
    if (auto it = j.find("stats"); it != j.end()) {
        c.stats.mse_no_outlier = json_get(*it, "mse_no_outlier", c.stats.mse_no_outlier);
        c.stats.r_outlier = json_get(*it, "r_outlier", c.stats.r_outlier);
        c.stats.r_quadrant = json_get(*it, "r_quadrant", c.stats.r_quadrant);
    }
    c.stats.validate();
    c.position_range = interval_from_json(j.value("position_range", nlohmann::json()), c.position_range);
    c.command = json_get(j, "command", c.command);
    c.host = json_get(j, "host", c.host);
    c.port = json_get(j, "port", c.port);
    c.external.timeout_s = json_get(j, "timeout", c.external.timeout_s);
    c.external.wall_to_sim = json_get(j, "wall_to_sim", c.external.wall_to_sim);
    c.external.send_truth = json_get(j, "send_truth", c.external.send_truth);
    if (c.kind == PredictorKind::External && c.command.empty() && (c.host.empty() || c.port <= 0))
        throw ConfigError("external predictor needs a command or host/port");
    return c;
}

inline std::unique_ptr<Predictor> make_predictor(const PredictorConfig& c, std::uint64_t seed) {
    switch (c.kind) {
    case PredictorKind::Oracle: return std::make_unique<OraclePredictor>(c.latency);
    case PredictorKind::Stochastic:
        return std::make_unique<StochasticPredictor>(c.stats, seed, c.latency, c.position_range);
    case PredictorKind::External: {
        std::unique_ptr<LineChannel> ch;
        if (!c.command.empty())
            ch = std::make_unique<ChildProcessChannel>(c.command);
        else
            ch = std::make_unique<TcpChannel>(c.host, c.port);
        return std::make_unique<ExternalPredictor>(std::move(ch), c.external);
    }
    }
    throw std::logic_error("unhandled predictor kind");
}

struct EpisodeConfig {
    Vec2mm initial_offset{};
    bool servo_enabled = true;
    PredictorConfig predictor{};
    ServoParams servo{};
    SpiralParams spiral{};
    ContactParams contact{};
    ImpedanceParams impedance{};
    WorldConfig world{};
    CameraConfig camera{};
    double per_move_time = 2.0;  // simulated seconds per servo move (move + settle)
    double budget = 90.0;
    int hole_darkness = 30;
    std::string background = "procedural:LightPlain:34";
    std::uint64_t seed = 0;

    void validate() const {
        world.validate();
        servo.validate();
        spiral.validate();
        contact.validate();
        impedance.validate();
        camera.validate();
        if (!(budget > 0.0))
            throw ConfigError("time budget must be positive");
        if (!(per_move_time >= 0.0))
            throw ConfigError("per_move_time must be non-negative");
        const double labeled = kLabelLimitPx / world.scale.px_per_mm;
        if (!world.inside_workspace(initial_offset))
            throw ConfigError("initial offset outside the workspace");
        if (servo_enabled && (std::abs(initial_offset.x) > labeled || std::abs(initial_offset.y) > labeled))
            throw ConfigError("initial offset outside the camera's labeled range");
    }
};

/// Reads an episode description; missing keys keep their defaults.
/// "initial_offset" is [x, y] in mm or {"magnitude": d, "angle_deg": a}.
inline EpisodeConfig episode_config_from_json(const nlohmann::json& j) {
    EpisodeConfig c;
    if (auto it = j.find("world"); it != j.end())
        c.world = world_config_from_json(*it);
    c.contact.capture_radius = c.world.hole.radial_clearance;
    if (auto it = j.find("initial_offset"); it != j.end()) {
        if (it->is_object() && it->contains("magnitude")) {
            const double m = it->at("magnitude").get<double>();
            const double a = json_get(*it, "angle_deg", 0.0) * M_PI / 180.0;
            c.initial_offset = {m * std::cos(a), m * std::sin(a)};
        } else {
            c.initial_offset = vec2mm_from_json(*it);
        }
    }
    c.servo_enabled = json_get(j, "servo_enabled", c.servo_enabled);
    if (auto it = j.find("predictor"); it != j.end())
        c.predictor = predictor_config_from_json(*it);
    if (auto it = j.find("servo"); it != j.end()) {
        c.servo.max_step = json_get(*it, "A", c.servo.max_step);
        c.servo.horizon = json_get(*it, "n", c.servo.horizon);
        c.servo.iterations = json_get(*it, "n_run", c.servo.iterations);
    }
    if (auto it = j.find("spiral"); it != j.end()) {
        auto& s = c.spiral;
        s.r_init = json_get(*it, "r_init", s.r_init);
        s.r_max = json_get(*it, "r_max", s.r_max);
        s.delta_theta_deg = json_get(*it, "delta_theta_deg", s.delta_theta_deg);
        s.delta_r = json_get(*it, "delta_r", s.delta_r);
        s.f_max = json_get(*it, "f_max", s.f_max);
        s.step_time = json_get(*it, "step_time", s.step_time);
        s.monitor_along_path = json_get(*it, "monitor_along_path", s.monitor_along_path);
    }
    if (auto it = j.find("contact"); it != j.end()) {
        c.contact.surface_stiffness = json_get(*it, "surface_stiffness", c.contact.surface_stiffness);
        c.contact.press_depth = json_get(*it, "press_depth", c.contact.press_depth);
        c.contact.capture_radius = json_get(*it, "capture_radius", c.contact.capture_radius);
    }
    if (auto it = j.find("impedance"); it != j.end()) {
        auto& p = c.impedance;
        p.damping = json_get(*it, "c", p.damping);
        p.stiffness = json_get(*it, "k", p.stiffness);
        p.dt = json_get(*it, "dt", p.dt);
        p.target_depth = json_get(*it, "target_depth", p.target_depth);
        p.push_force = json_get(*it, "push_force", p.push_force);
        p.timeout = json_get(*it, "timeout", p.timeout);
    }
    if (auto it = j.find("camera"); it != j.end())
        c.camera = camera_config_from_json(*it);
    c.per_move_time = json_get(j, "per_move_time", c.per_move_time);
    c.budget = json_get(j, "budget", c.budget);
    c.hole_darkness = json_get(j, "hole_darkness", c.hole_darkness);
    c.background = json_get(j, "background", c.background);
    c.seed = json_get<std::uint64_t>(j, "seed", c.seed);
    c.validate();
    return c;
}

enum class EpisodeTermination {
    Inserted,
    RExceeded,
    WorkspaceAbort,
    PredictorFailure,
    BudgetExceeded,
    JammedTimeout,
};

inline std::string_view to_string(EpisodeTermination t) {
    switch (t) {
    case EpisodeTermination::Inserted: return "inserted";
    case EpisodeTermination::RExceeded: return "r_exceeded";
    case EpisodeTermination::WorkspaceAbort: return "workspace_abort";
    case EpisodeTermination::PredictorFailure: return "predictor_failure";
    case EpisodeTermination::BudgetExceeded: return "budget_exceeded";
    case EpisodeTermination::JammedTimeout: return "jammed_timeout";
    }
    return "?";
}

struct EpisodeResult {
    bool success = false;
    EpisodeTermination termination = EpisodeTermination::BudgetExceeded;
    std::string detail;
    Vec2mm initial_offset;
    double servo_time = 0.0;
    double spiral_time = 0.0;
    double insertion_time = 0.0;
    double total = 0.0;
    ServoTrace servo;
    std::optional<SpiralOutcome> spiral;
    std::optional<InsertionOutcome> insertion;
};

inline nlohmann::json to_json(const EpisodeResult& r) {
    nlohmann::json j{{"success", r.success},
                     {"termination", to_string(r.termination)},
                     {"detail", r.detail},
                     {"initial_offset", to_json(r.initial_offset)},
                     {"phase_times", {{"servo", r.servo_time}, {"spiral", r.spiral_time}, {"insertion", r.insertion_time}}},
                     {"total", r.total},
                     {"servo_iterations", r.servo.records.size()}};
    if (r.spiral)
        j["spiral"] = {{"found", r.spiral->found},
                       {"steps", r.spiral->steps},
                       {"termination", to_string(r.spiral->termination)},
                       {"final_offset", to_json(r.spiral->final_offset)}};
    if (r.insertion)
        j["insertion"] = {{"success", r.insertion->success},
                          {"depth", r.insertion->depth},
                          {"elapsed", r.insertion->elapsed},
                          {"termination", to_string(r.insertion->termination)}};
    return j;
}

/// Runs servo (optional) -> spiral -> insertion.  Failures are reported in
/// the result, never thrown.  `predictor` overrides the configured one.
inline EpisodeResult run_episode(const EpisodeConfig& cfg, Predictor* predictor = nullptr,
                                 bool keep_traces = false) {
    cfg.validate();
    EpisodeResult res;
    res.initial_offset = cfg.initial_offset;

    WorldState world;
    world.peg_offset = cfg.initial_offset;
    world.peg_z = 10.0;
    world.rng_seed = cfg.seed;

    auto finish = [&](EpisodeTermination t, std::string detail = {}) {
        res.termination = t;
        res.detail = std::move(detail);
        res.success = t == EpisodeTermination::Inserted;
        res.total = res.servo_time + res.spiral_time + res.insertion_time;
        return res;
    };

    if (cfg.servo_enabled && cfg.servo.iterations > 0) {
        std::unique_ptr<Predictor> owned;
        try {
            if (!predictor) {
                owned = make_predictor(cfg.predictor, derive_seed(cfg.seed, {0x9E}));
                predictor = owned.get();
            }
            ServoScene scene{cfg.world, make_procedural_mask(cfg.world.peg, cfg.world.scale),
                             predictor->needs_image() ? load_background(cfg.background) : GrayImage{}, cfg.camera,
                             cfg.hole_darkness};
            res.servo = run_servoing(world, *predictor, scene, cfg.servo, cfg.per_move_time, cfg.budget);
        } catch (const PredictorError& e) {
            res.servo_time = world.sim_time;
            return finish(EpisodeTermination::PredictorFailure, e.what());
        }
        res.servo_time = world.sim_time;
        if (res.servo.abort == ServoAbort::Workspace)
            return finish(EpisodeTermination::WorkspaceAbort, "servo left the workspace");
        if (res.servo.abort == ServoAbort::Budget)
            return finish(EpisodeTermination::BudgetExceeded, "budget spent while servoing");
    }

    const double spiral_start = world.sim_time;
    res.spiral = run_spiral(world, cfg.contact, cfg.spiral, cfg.world, cfg.budget, keep_traces);
    res.spiral_time = world.sim_time - spiral_start;
    switch (res.spiral->termination) {
    case SpiralTermination::ForceDrop: break;
    case SpiralTermination::RExceeded: return finish(EpisodeTermination::RExceeded, "hole not found within r_max");
    case SpiralTermination::WorkspaceAbort: return finish(EpisodeTermination::WorkspaceAbort, "spiral left the workspace");
    case SpiralTermination::Budget: return finish(EpisodeTermination::BudgetExceeded, "budget spent while searching");
    }

    ImpedanceParams imp = cfg.impedance;
    const double remaining = cfg.budget - world.sim_time;
    const bool budget_limited = remaining < imp.timeout;
    imp.timeout = std::min(imp.timeout, remaining);
    if (!(imp.timeout > 0.0))
        return finish(EpisodeTermination::BudgetExceeded, "no time left for insertion");
    const double insert_start = world.sim_time;
    res.insertion = impedance_insert(world, imp, cfg.contact, cfg.world.hole.radial_clearance, keep_traces);
    res.insertion_time = world.sim_time - insert_start;
    if (!res.insertion->success)
        return finish(budget_limited ? EpisodeTermination::BudgetExceeded : EpisodeTermination::JammedTimeout,
                      "insertion did not reach the target depth");
    return finish(EpisodeTermination::Inserted);
}

}  // namespace pih

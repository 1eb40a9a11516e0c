// Command-line front end: dataset generation, predictor evaluation,
// single episodes, experiment suites, comparison tables and plots.
//
// Exit codes: 0 ok, 1 runtime error, 2 configuration error, 3 a suite
// finished but some episodes failed for predictor/config reasons.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pih/camera.hpp"
#include "pih/dataset.hpp"
#include "pih/episode.hpp"
#include "pih/experiment.hpp"
#include "pih/metrics.hpp"
#include "pih/plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw pih::ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw pih::ConfigError(path + ": " + e.what());
    }
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream out(p);
    out << text;
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
}

struct Options {
    std::string config;
    std::string manifest;
    std::string recipe;
    std::string mask;
    std::string dataset;
    std::vector<std::string> reports;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> downsample;
    std::optional<int> positions;
    std::size_t max_episodes = 10;
};

int gen_data(const Options& o) {
    pih::DatasetManifest m;
    if (!o.manifest.empty())
        m = pih::manifest_from_json(load_json(o.manifest));
    else if (!o.recipe.empty())
        m = pih::recipe(o.recipe, 0, o.positions.value_or(0));
    else
        throw pih::ConfigError("gen-data needs --manifest or --recipe");
    if (o.seed)
        m.seed = *o.seed;
    if (o.downsample)
        m.downsample = *o.downsample;
    if (o.positions && !o.manifest.empty())
        m.positions_per_image = *o.positions;
    m.validate();
    pih::WorldConfig world;
    const auto mask = o.mask.empty() ? pih::make_procedural_mask(world.peg, world.scale) : pih::read_mask(o.mask);
    const auto summary = pih::generate_dataset(m, o.out, mask);
    std::cout << json{{"out", o.out}, {"samples", summary.sample_count}}.dump() << "\n";
    return 0;
}

int eval_predictor(const Options& o) {
    if (o.dataset.empty())
        throw pih::ConfigError("eval-predictor needs --dataset");
    const json cfg = o.config.empty() ? json::object() : load_json(o.config);
    const auto pc = pih::predictor_config_from_json(cfg.contains("predictor") ? cfg["predictor"] : cfg);
    auto predictor = pih::make_predictor(pc, o.seed.value_or(cfg.value("seed", std::uint64_t{0})));
    std::vector<pih::PredictionSample> samples;
    const auto report = pih::eval_predictor(o.dataset, *predictor, &samples);
    const auto j = pih::to_json(report);
    std::cout << j.dump(2) << "\n";
    if (!o.out.empty()) {
        write_text(fs::path(o.out) / "metrics.json", j.dump(2) + "\n");
        std::ofstream csv(fs::path(o.out) / "predictions.csv");
        csv << "label_x,label_y,pred_x,pred_y,mse,outlier,quadrant_match\n";
        for (const auto& s : samples)
            csv << s.label.x << "," << s.label.y << "," << s.predicted.x << "," << s.predicted.y << "," << s.mse()
                << "," << s.outlier() << "," << s.quadrant_match() << "\n";
    }
    return 0;
}

int run_episode(const Options& o) {
    json cfg_json = o.config.empty() ? json::object() : load_json(o.config);
    if (o.seed)
        cfg_json["seed"] = *o.seed;
    const auto cfg = pih::episode_config_from_json(cfg_json);
    const auto result = pih::run_episode(cfg, nullptr, !o.out.empty());
    const auto j = pih::to_json(result);
    std::cout << j.dump(2) << "\n";
    if (!o.out.empty()) {
        const fs::path dir(o.out);
        write_text(dir / "result.json", j.dump(2) + "\n");
        std::ofstream servo(dir / "servo_trace.jsonl");
        pih::write_jsonl(servo, result.servo);
        if (result.spiral) {
            std::ofstream spiral(dir / "spiral_trace.jsonl");
            pih::write_jsonl(spiral, *result.spiral);
        }
        if (result.insertion) {
            std::ofstream ins(dir / "insertion.csv");
            pih::write_csv(ins, *result.insertion);
        }
    }
    return result.termination == pih::EpisodeTermination::PredictorFailure ? kExitPartial : 0;
}

int run_experiment(const Options& o) {
    if (o.config.empty())
        throw pih::ConfigError("run-experiment needs --config");
    auto suite = pih::suite_config_from_json(load_json(o.config));
    if (o.seed)
        suite.seed = *o.seed;
    const auto result = pih::run_experiment(suite);
    const fs::path out = o.out.empty() ? fs::path("runs") / suite.name : fs::path(o.out);
    pih::write_reports(out, suite, result);
    std::cout << pih::compare_table({pih::summary_json(suite, result)});
    std::cerr << "reports written to " << out.string() << "\n";
    return result.partial_failure ? kExitPartial : 0;
}

int compare(const Options& o) {
    if (o.reports.empty())
        throw pih::ConfigError("compare needs at least one report directory");
    std::vector<json> summaries;
    for (const auto& r : o.reports) {
        const fs::path p = fs::is_directory(r) ? fs::path(r) / "summary.json" : fs::path(r);
        summaries.push_back(load_json(p.string()));
    }
    const auto table = pih::compare_table(summaries);
    std::cout << table;
    if (!o.out.empty())
        write_text(fs::path(o.out) / "compare.txt", table);
    return 0;
}

int plot(const Options& o) {
    if (o.reports.size() != 1)
        throw pih::ConfigError("plot takes exactly one report directory");
    const fs::path out = o.out.empty() ? fs::path(o.reports[0]) / "plots" : fs::path(o.out);
    for (const auto& p : pih::plot_reports(o.reports[0], out, o.max_episodes))
        std::cout << p.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Peg-in-hole search simulator and experiment harness"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Override the seed");
        sub->add_option("--out", o.out, "Output directory");
    };

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    gen->add_option("--manifest,--config", o.manifest, "Dataset manifest (JSON)");
    gen->add_option("--recipe", o.recipe, "Named recipe, e.g. Plain, Image, test:LightPlain");
    gen->add_option("--mask", o.mask, "Gripper mask PGM (with .json sidecar)");
    gen->add_option("--downsample", o.downsample, "Reduce written images by this factor");
    gen->add_option("--positions", o.positions, "Positions per background");
    add_common(gen);
    gen->get_option("--out")->required();

    auto* eval = app.add_subcommand("eval-predictor", "Score a predictor on a generated dataset");
    eval->add_option("--dataset", o.dataset, "Dataset directory")->required();
    eval->add_option("--config", o.config, "Predictor config (JSON)");
    add_common(eval);

    auto* episode = app.add_subcommand("run-episode", "Run one servo/spiral/insertion episode");
    episode->add_option("--config", o.config, "Episode config (JSON)");
    add_common(episode);

    auto* exp = app.add_subcommand("run-experiment", "Run an experiment suite");
    exp->add_option("--config", o.config, "Suite config (JSON)")->required();
    add_common(exp);

    auto* cmp = app.add_subcommand("compare", "Tabulate mean times per offset and condition");
    cmp->add_option("reports", o.reports, "Report directories or summary.json files")->required();
    cmp->add_option("--out", o.out, "Also write compare.txt here");

    auto* plt = app.add_subcommand("plot", "Emit SVG charts from a report directory");
    plt->add_option("reports", o.reports, "Report directory")->required();
    plt->add_option("--out", o.out, "Output directory (default: <report>/plots)");
    plt->add_option("--max-episodes", o.max_episodes, "Traces per chart");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*gen)
            return gen_data(o);
        if (*eval)
            return eval_predictor(o);
        if (*episode)
            return run_episode(o);
        if (*exp)
            return run_experiment(o);
        if (*cmp)
            return compare(o);
        if (*plt)
            return plot(o);
    } catch (const pih::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}

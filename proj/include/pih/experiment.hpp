#pragma once

// Experiment suites: a grid of (initial offset x predictor x servo on/off)
// cells, N seeded episodes each, with CSV/JSON reports.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pih/episode.hpp"
#include "pih/rng.hpp"

namespace pih {

struct PredictorVariant {
    std::string name;
    PredictorConfig config;
};

struct SuiteConfig {
    std::string name = "suite";
    EpisodeConfig base{};
    std::vector<double> offsets_mm;
    double direction_deg = 0.0;
    bool random_direction = false;
    std::vector<PredictorVariant> predictors;
    std::vector<bool> servo_modes{true, false};
    int episodes_per_cell = 10;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool keep_traces = true;
};

/// Offsets of the ten timed runs on the white surface (mm).
inline const std::vector<double> kTimedOffsets{23.8, 15.0, 12.0, 11.7, 10.0, 12.5, 11.0, 14.1, 4.0, 13.6};

inline SuiteConfig suite_config_from_json(const nlohmann::json& j) {
    SuiteConfig s;
    s.name = json_get<std::string>(j, "name", s.name);
    s.base = episode_config_from_json(j.value("episode", nlohmann::json::object()));
    s.offsets_mm = json_get(j, "offsets_mm", kTimedOffsets);
    if (auto it = j.find("direction_deg"); it != j.end()) {
        if (it->is_string() && it->get<std::string>() == "random")
            s.random_direction = true;
        else
            s.direction_deg = it->get<double>();
    }
    s.servo_modes = json_get(j, "servo_modes", s.servo_modes);
    s.episodes_per_cell = json_get(j, "episodes_per_cell", s.episodes_per_cell);
    s.seed = json_get<std::uint64_t>(j, "seed", s.seed);
    s.threads = json_get(j, "threads", s.threads);
    s.keep_traces = json_get(j, "keep_traces", s.keep_traces);
    for (const auto& p : j.value("predictors", nlohmann::json::array()))
        s.predictors.push_back({json_get<std::string>(p, "name", "predictor"), predictor_config_from_json(p)});
    if (s.predictors.empty())
        s.predictors.push_back({"default", s.base.predictor});
    if (s.episodes_per_cell < 0)
        throw ConfigError("episodes_per_cell must be non-negative");
    if (s.servo_modes.empty())
        throw ConfigError("servo_modes must not be empty");
    return s;
}

struct EpisodeRow {
    std::size_t cell = 0;
    double offset_mm = 0.0;
    double direction_deg = 0.0;
    std::string predictor;
    bool servo = false;
    int rep = 0;
    std::uint64_t seed = 0;
    EpisodeResult result;
    bool errored = false;  // configuration or predictor failure
};

struct CellSummary {
    std::size_t cell = 0;
    double offset_mm = 0.0;
    std::string predictor;
    bool servo = false;
    int episodes = 0;
    int successes = 0;
    int errors = 0;
    double success_rate = 0.0;
    double mean_time = 0.0;    // over successful episodes
    double median_time = 0.0;  // over successful episodes
    std::map<std::string, int> terminations;
};

struct SuiteResult {
    std::vector<EpisodeRow> rows;
    std::vector<CellSummary> cells;
    bool partial_failure = false;
};

inline SuiteResult run_experiment(const SuiteConfig& suite) {
    struct Job {
        std::size_t cell, offset_index, predictor_index;
        bool servo;
        int rep;
    };
    std::vector<Job> jobs;
    std::vector<CellSummary> cells;
    for (std::size_t oi = 0; oi < suite.offsets_mm.size(); ++oi)
        for (std::size_t pi = 0; pi < suite.predictors.size(); ++pi)
            for (bool servo : suite.servo_modes) {
                CellSummary c;
                c.cell = cells.size();
                c.offset_mm = suite.offsets_mm[oi];
                c.predictor = suite.predictors[pi].name;
                c.servo = servo;
                for (int r = 0; r < suite.episodes_per_cell; ++r)
                    jobs.push_back({c.cell, oi, pi, servo, r});
                cells.push_back(c);
            }

    SuiteResult out;
    out.rows.resize(jobs.size());
    auto run_job = [&](std::size_t i) {
        const Job& job = jobs[i];
        EpisodeRow row;
        row.cell = job.cell;
        row.offset_mm = suite.offsets_mm[job.offset_index];
        row.predictor = suite.predictors[job.predictor_index].name;
        row.servo = job.servo;
        row.rep = job.rep;
        // Servo-on and servo-off runs of the same repetition share a seed
        // and therefore the same initial offset.
        row.seed = derive_seed(suite.seed, {job.offset_index, static_cast<std::uint64_t>(job.rep)});
        row.direction_deg = suite.random_direction
                                ? 360.0 * static_cast<double>(splitmix64(row.seed) >> 11) * 0x1.0p-53
                                : suite.direction_deg;
        EpisodeConfig cfg = suite.base;
        cfg.predictor = suite.predictors[job.predictor_index].config;
        cfg.servo_enabled = job.servo;
        cfg.seed = derive_seed(row.seed, {job.predictor_index});
        const double a = row.direction_deg * M_PI / 180.0;
        cfg.initial_offset = {row.offset_mm * std::cos(a), row.offset_mm * std::sin(a)};
        try {
            row.result = run_episode(cfg, nullptr, suite.keep_traces);
            row.errored = row.result.termination == EpisodeTermination::PredictorFailure;
        } catch (const std::exception& e) {
            row.errored = true;
            row.result.detail = e.what();
            row.result.termination = EpisodeTermination::PredictorFailure;
        }
        out.rows[i] = std::move(row);
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(suite.threads ? suite.threads
                                                                           : std::thread::hardware_concurrency(),
                                                             static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i)
            run_job(i);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < jobs.size(); i += workers)
                    run_job(i);
            });
        for (auto& t : pool)
            t.join();
    }

    for (auto& c : cells) {
        std::vector<double> times;
        for (const auto& row : out.rows) {
            if (row.cell != c.cell)
                continue;
            ++c.episodes;
            c.terminations[std::string(to_string(row.result.termination))]++;
            if (row.errored)
                ++c.errors;
            if (row.result.success) {
                ++c.successes;
                times.push_back(row.result.total);
            }
        }
        c.success_rate = c.episodes ? static_cast<double>(c.successes) / c.episodes : 0.0;
        if (!times.empty()) {
            double sum = 0.0;
            for (double t : times)
                sum += t;
            c.mean_time = sum / static_cast<double>(times.size());
            std::sort(times.begin(), times.end());
            const std::size_t m = times.size() / 2;
            c.median_time = times.size() % 2 ? times[m] : 0.5 * (times[m - 1] + times[m]);
        }
        out.partial_failure = out.partial_failure || c.errors > 0;
    }
    out.cells = std::move(cells);
    return out;
}

namespace detail {
inline std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}
}  // namespace detail

inline void write_episodes_csv(std::ostream& os, const SuiteResult& r) {
    os << "cell,offset_mm,direction_deg,predictor,servo,rep,seed,success,termination,"
          "servo_time,spiral_time,insertion_time,total_time,residual_x,residual_y,spiral_steps\n";
    for (const auto& row : r.rows) {
        const auto& e = row.result;
        const Vec2mm residual = e.spiral ? e.spiral->final_offset : Vec2mm{};
        os << row.cell << "," << detail::fmt6(row.offset_mm) << "," << detail::fmt6(row.direction_deg) << ","
           << row.predictor << "," << (row.servo ? 1 : 0) << "," << row.rep << "," << row.seed << ","
           << (e.success ? 1 : 0) << "," << to_string(e.termination) << "," << detail::fmt6(e.servo_time) << ","
           << detail::fmt6(e.spiral_time) << "," << detail::fmt6(e.insertion_time) << "," << detail::fmt6(e.total)
           << "," << detail::fmt6(residual.x) << "," << detail::fmt6(residual.y) << ","
           << (e.spiral ? e.spiral->steps : 0) << "\n";
    }
}

inline nlohmann::json summary_json(const SuiteConfig& suite, const SuiteResult& r) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells)
        cells.push_back({{"cell", c.cell},
                         {"offset_mm", c.offset_mm},
                         {"predictor", c.predictor},
                         {"servo", c.servo},
                         {"episodes", c.episodes},
                         {"successes", c.successes},
                         {"errors", c.errors},
                         {"success_rate", c.success_rate},
                         {"mean_time", c.mean_time},
                         {"median_time", c.median_time},
                         {"terminations", c.terminations}});
    return {{"name", suite.name},
            {"seed", suite.seed},
            {"budget", suite.base.budget},
            {"episodes_per_cell", suite.episodes_per_cell},
            {"partial_failure", r.partial_failure},
            {"cells", cells}};
}

/// episodes.csv, summary.json, servo_traces.jsonl, spiral_traces.jsonl.
inline void write_reports(const std::filesystem::path& dir, const SuiteConfig& suite, const SuiteResult& r) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "episodes.csv");
        write_episodes_csv(f, r);
    }
    {
        std::ofstream f(dir / "summary.json");
        f << summary_json(suite, r).dump(2) << "\n";
    }
    std::ofstream servo(dir / "servo_traces.jsonl");
    std::ofstream spiral(dir / "spiral_traces.jsonl");
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        write_jsonl(servo, r.rows[i].result.servo, i);
        if (r.rows[i].result.spiral)
            write_jsonl(spiral, *r.rows[i].result.spiral, i);
    }
    if (!servo || !spiral)
        throw std::runtime_error("failed writing trace files under " + dir.string());
}

/// Offset-by-condition pivot of one or more summary.json documents.  Cells
/// show the mean time of successful runs; a cell with no success shows
/// ">budget" and a partially successful one appends "(k/n)".
inline std::string compare_table(const std::vector<nlohmann::json>& summaries) {
    std::vector<double> offsets;
    std::vector<std::string> columns;
    std::map<std::pair<double, std::string>, std::string> cells;
    for (const auto& s : summaries) {
        const double budget = s.value("budget", 90.0);
        for (const auto& c : s.at("cells")) {
            const double off = c.at("offset_mm").get<double>();
            std::string col = c.at("predictor").get<std::string>() + (c.at("servo").get<bool>() ? " +servo" : " -servo");
            if (summaries.size() > 1)
                col = s.value("name", std::string("suite")) + ":" + col;
            if (std::find(offsets.begin(), offsets.end(), off) == offsets.end())
                offsets.push_back(off);
            if (std::find(columns.begin(), columns.end(), col) == columns.end())
                columns.push_back(col);
            const int n = c.at("episodes").get<int>(), k = c.at("successes").get<int>();
            char buf[64];
            if (n == 0)
                std::snprintf(buf, sizeof buf, "-");
            else if (k == 0)
                std::snprintf(buf, sizeof buf, ">%.1f", budget);
            else if (k == n)
                std::snprintf(buf, sizeof buf, "%.1f", c.at("mean_time").get<double>());
            else
                std::snprintf(buf, sizeof buf, "%.1f (%d/%d)", c.at("mean_time").get<double>(), k, n);
            cells[{off, col}] = buf;
        }
    }
    std::vector<std::size_t> width{std::string("offset_mm").size()};
    for (const auto& col : columns) {
        std::size_t w = col.size();
        for (double off : offsets)
            w = std::max(w, cells[{off, col}].size());
        width.push_back(w);
    }
    std::ostringstream os;
    auto pad = [&](const std::string& v, std::size_t w) { os << std::string(w - v.size(), ' ') << v; };
    pad("offset_mm", width[0]);
    for (std::size_t i = 0; i < columns.size(); ++i) {
        os << "  ";
        pad(columns[i], width[i + 1]);
    }
    os << "\n";
    for (double off : offsets) {
        char label[32];
        std::snprintf(label, sizeof label, "%.1f", off);
        pad(label, width[0]);
        for (std::size_t i = 0; i < columns.size(); ++i) {
            os << "  ";
            const auto it = cells.find({off, columns[i]});
            pad(it == cells.end() ? "-" : it->second, width[i + 1]);
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace pih

#pragma once

// Domain-randomized synthetic dataset generation: stratified hole
// positions, random darkness and diameter, category backgrounds.

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pih/backgrounds.hpp"
#include "pih/camera.hpp"
#include "pih/image.hpp"
#include "pih/rng.hpp"
#include "pih/world.hpp"

namespace pih {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct RandomizationRanges {
    Interval position{-66.0, 66.0};
    Interval darkness{10.0, 70.0};
    Interval diameter{10.0, 35.0};

    void validate() const {
        if (!(position.lo < 0.0 && position.hi > 0.0))
            throw ConfigError("position range must straddle zero");
        if (!(darkness.lo <= darkness.hi) || darkness.lo < 0.0 || darkness.hi > 255.0)
            throw ConfigError("darkness range must lie in [0,255]");
        if (!(diameter.lo <= diameter.hi) || !(diameter.lo > 0.0))
            throw ConfigError("diameter range must be positive and nonempty");
    }
};

/// `n_per_quadrant` integer positions strictly inside each quadrant, from a
/// jittered grid over [1, hi] x [1, hi] (mirrored for negative sides).
/// Order: Topright, Topleft, Bottomleft, Bottomright blocks.
inline std::vector<Vec2px> sample_positions(int n_per_quadrant, Interval range, std::uint64_t seed) {
    if (n_per_quadrant < 1)
        throw std::invalid_argument("n_per_quadrant must be at least 1");
    if (!(range.lo < 0.0 && range.hi > 0.0))
        throw std::invalid_argument("position range must straddle zero");
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_per_quadrant))));
    const int rows = (n_per_quadrant + cols - 1) / cols;

    const int pos_extent = static_cast<int>(std::floor(range.hi));
    const int neg_extent = static_cast<int>(std::floor(-range.lo));
    if (std::min(pos_extent, neg_extent) < std::max(cols, rows))
        throw std::invalid_argument("position range too narrow for the sampling grid");

    // Integer offsets 1..extent split into `cells` contiguous groups.
    auto draw = [](int cell, int cells, int extent, Rng& rng) {
        const int first = 1 + static_cast<int>(static_cast<long>(cell) * extent / cells);
        const int last = static_cast<int>(static_cast<long>(cell + 1) * extent / cells);
        return std::uniform_int_distribution<int>(first, last)(rng);
    };

    constexpr std::array<std::array<int, 2>, 4> signs{{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};
    std::vector<Vec2px> out;
    out.reserve(static_cast<std::size_t>(4 * n_per_quadrant));
    for (std::size_t q = 0; q < signs.size(); ++q) {
        Rng rng = make_rng(derive_seed(seed, {q}));
        std::vector<int> cells(static_cast<std::size_t>(cols * rows));
        std::iota(cells.begin(), cells.end(), 0);
        std::shuffle(cells.begin(), cells.end(), rng);
        cells.resize(static_cast<std::size_t>(n_per_quadrant));
        std::sort(cells.begin(), cells.end());
        const int ex = signs[q][0] > 0 ? pos_extent : neg_extent;
        const int ey = signs[q][1] > 0 ? pos_extent : neg_extent;
        for (int c : cells) {
            const int gx = c % cols, gy = c / cols;
            out.push_back({static_cast<double>(signs[q][0] * draw(gx, cols, ex, rng)),
                           static_cast<double>(signs[q][1] * draw(gy, rows, ey, rng))});
        }
    }
    return out;
}

struct CategoryUse {
    BackgroundCategory category = BackgroundCategory::Plain;
    int count = 0;                     // backgrounds drawn from this category
    std::vector<std::string> sources;  // empty: the procedural pool
};

struct DatasetManifest {
    std::string name = "dataset";
    std::vector<CategoryUse> categories;
    int positions_per_image = 776;
    int repeats = 1;  // extra passes over every (background, position) pair
    RandomizationRanges ranges{};
    CameraConfig camera{};
    int downsample = 1;  // write images reduced by this factor
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0: hardware concurrency

    std::size_t background_count() const {
        std::size_t n = 0;
        for (const auto& c : categories)
            n += static_cast<std::size_t>(c.count);
        return n;
    }
    std::size_t sample_count() const {
        return background_count() * static_cast<std::size_t>(positions_per_image) *
               static_cast<std::size_t>(repeats);
    }

    void validate() const {
        if (categories.empty())
            throw ConfigError("manifest has no categories");
        for (const auto& c : categories) {
            if (c.count < 1)
                throw ConfigError("category count must be positive");
            if (c.category == BackgroundCategory::LightPlain)
                for (const auto& s : c.sources)
                    if (s.rfind("procedural:", 0) == 0 && s.rfind("procedural:LightPlain:", 0) != 0)
                        throw ConfigError("LightPlain sources must be light plain backgrounds");
        }
        if (positions_per_image < 4 || positions_per_image % 4 != 0)
            throw ConfigError("positions_per_image must be a positive multiple of 4");
        if (repeats < 1)
            throw ConfigError("repeats must be at least 1");
        if (downsample < 1 || kViewSize % downsample != 0)
            throw ConfigError("downsample must divide 160");
        ranges.validate();
        camera.validate();
    }
};

inline Interval interval_from_json(const nlohmann::json& j, Interval fallback) {
    if (j.is_null())
        return fallback;
    if (!j.is_array() || j.size() != 2)
        throw ConfigError("intervals are written as [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest m;
    m.name = json_get<std::string>(j, "name", m.name);
    m.positions_per_image = json_get(j, "positions_per_image", m.positions_per_image);
    m.repeats = json_get(j, "repeats", m.repeats);
    m.downsample = json_get(j, "downsample", m.downsample);
    m.seed = json_get<std::uint64_t>(j, "seed", m.seed);
    m.threads = json_get(j, "threads", m.threads);
    if (auto it = j.find("ranges"); it != j.end()) {
        m.ranges.position = interval_from_json(it->value("position", nlohmann::json()), m.ranges.position);
        m.ranges.darkness = interval_from_json(it->value("darkness", nlohmann::json()), m.ranges.darkness);
        m.ranges.diameter = interval_from_json(it->value("diameter", nlohmann::json()), m.ranges.diameter);
    }
    if (auto it = j.find("camera"); it != j.end())
        m.camera = camera_config_from_json(*it);
    for (const auto& c : j.value("categories", nlohmann::json::array())) {
        const auto name = c.at("name").get<std::string>();
        const auto cat = category_from_string(name);
        if (!cat)
            throw ConfigError("unknown category: " + name);
        m.categories.push_back({*cat, c.at("count").get<int>(),
                                c.value("sources", std::vector<std::string>{})});
    }
    m.validate();
    return m;
}

inline nlohmann::json to_json(const DatasetManifest& m) {
    nlohmann::json cats = nlohmann::json::array();
    for (const auto& c : m.categories)
        cats.push_back({{"name", to_string(c.category)}, {"count", c.count}, {"sources", c.sources}});
    return {
        {"name", m.name},
        {"seed", m.seed},
        {"positions_per_image", m.positions_per_image},
        {"repeats", m.repeats},
        {"downsample", m.downsample},
        {"sample_count", m.sample_count()},
        {"ranges",
         {{"position", {m.ranges.position.lo, m.ranges.position.hi}},
          {"darkness", {m.ranges.darkness.lo, m.ranges.darkness.hi}},
          {"diameter", {m.ranges.diameter.lo, m.ranges.diameter.hi}}}},
        {"camera",
         {{"gripper_intensity", m.camera.gripper_intensity},
          {"noise_sigma", m.camera.noise_sigma},
          {"view_px_per_label_px", m.camera.view_px_per_label_px}}},
        {"categories", cats},
    };
}

/// Named recipes for the training and testing sets.  `positions` defaults
/// to 776 for training sets and 584 for testing sets.
inline DatasetManifest recipe(const std::string& name, std::uint64_t seed = 0, int positions = 0) {
    using C = BackgroundCategory;
    DatasetManifest m;
    m.name = name;
    m.seed = seed;
    m.positions_per_image = positions > 0 ? positions : 776;
    auto mixed = [&](int total) {
        m.categories = {{C::Textures, total / 2, {}}, {C::Scenery, total - total / 2, {}}};
    };
    if (name == "Plain") {
        m.categories = {{C::Plain, 90, {}}};
    } else if (name == "Image") {
        m.categories = {{C::Image, 90, {}}};
    } else if (name == "Textures+Scenery(18)") {
        mixed(18);
    } else if (name == "Textures+Scenery(30)") {
        mixed(30);
    } else if (name == "Textures+Scenery(45)") {
        mixed(45);
    } else if (name == "Textures+Scenery(90)") {
        mixed(90);
    } else if (name == "Textures(45)") {
        m.categories = {{C::Textures, 45, {}}};
    } else if (name == "Metallic(45)") {
        m.categories = {{C::Metallic, 45, {}}};
    } else if (name == "Scenery(45)") {
        m.categories = {{C::Scenery, 45, {}}};
    } else if (auto cat = category_from_string(name.rfind("test:", 0) == 0 ? name.substr(5) : "")) {
        m.positions_per_image = positions > 0 ? positions : 584;
        m.categories = {{*cat, *cat == C::LightPlain ? 35 : 90, {}}};
        return m;
    } else {
        throw ConfigError("unknown recipe: " + name);
    }
    // Every training set holds the same number of images; smaller
    // background pools are reused.
    const std::size_t full = 90;
    m.repeats = static_cast<int>(full / std::max<std::size_t>(1, m.background_count()));
    if (m.repeats < 1)
        m.repeats = 1;
    return m;
}

struct DatasetSample {
    std::string image_path;  // relative to the dataset root
    Vec2px label;
    std::string background;
    int darkness = 0;
    int diameter = 0;
    std::uint64_t seed = 0;
};

/// Draws darkness and diameter, renders and writes one sample image.
inline DatasetSample synthesize_sample(const GrayImage& background, const std::string& background_id,
                                       Vec2px position, const RandomizationRanges& ranges,
                                       const GripperMask& mask, std::uint64_t seed,
                                       const std::filesystem::path& root, const std::string& rel_path,
                                       const CameraConfig& camera = {}, int downsample_factor = 1) {
    if (!ranges.position.contains(position.x) || !ranges.position.contains(position.y))
        throw std::invalid_argument("position outside the randomization range");
    Rng rng = make_rng(seed);
    RenderParams p;
    p.hole_center = position;
    p.hole_darkness = std::uniform_int_distribution<int>(static_cast<int>(std::ceil(ranges.darkness.lo)),
                                                         static_cast<int>(std::floor(ranges.darkness.hi)))(rng);
    const int diameter = std::uniform_int_distribution<int>(static_cast<int>(std::ceil(ranges.diameter.lo)),
                                                            static_cast<int>(std::floor(ranges.diameter.hi)))(rng);
    p.hole_diameter_px = diameter;
    p.noise_sigma = camera.noise_sigma;
    p.seed = rng();
    const GrayImage img = downsample(render_concat_view(background, mask, p, camera), downsample_factor);
    write_pgm(root / rel_path, img);
    return {rel_path, position, background_id, p.hole_darkness, diameter, seed};
}

inline nlohmann::json to_json(const DatasetSample& s, std::size_t index) {
    return {{"index", index},   {"image", s.image_path},   {"x", s.label.x},
            {"y", s.label.y},   {"darkness", s.darkness},  {"diameter", s.diameter},
            {"background", s.background}, {"seed", s.seed}};
}

/// Picks the concrete background sources for every category slot.
inline std::vector<std::string> resolve_backgrounds(const DatasetManifest& m) {
    std::vector<std::string> out;
    for (std::size_t ci = 0; ci < m.categories.size(); ++ci) {
        const auto& use = m.categories[ci];
        std::vector<std::string> pool = use.sources;
        if (pool.empty())
            for (int i = 0; i < procedural_pool_size(use.category); ++i)
                pool.push_back(procedural_source(use.category, i));
        Rng rng = make_rng(derive_seed(m.seed, {0xB6, ci}));
        std::shuffle(pool.begin(), pool.end(), rng);
        for (int i = 0; i < use.count; ++i)
            out.push_back(pool[static_cast<std::size_t>(i) % pool.size()]);
    }
    return out;
}

struct DatasetSummary {
    std::size_t sample_count = 0;
    std::vector<DatasetSample> samples;
};

inline std::string sample_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "images/%06zu.pgm", index);
    return buf;
}

/// Writes images/NNNNNN.pgm, labels.jsonl and manifest.json under `out`.
/// An INCOMPLETE marker exists until every file has been written.
inline DatasetSummary generate_dataset(const DatasetManifest& manifest, const std::filesystem::path& out,
                                       const GripperMask& mask) {
    namespace fs = std::filesystem;
    manifest.validate();
    fs::create_directories(out / "images");
    const fs::path marker = out / "INCOMPLETE";
    std::ofstream(marker) << "generation in progress\n";

    const auto sources = resolve_backgrounds(manifest);
    std::vector<GrayImage> backgrounds;
    backgrounds.reserve(sources.size());
    for (const auto& s : sources)
        backgrounds.push_back(load_background(s));

    const int per_quadrant = manifest.positions_per_image / 4;
    std::vector<std::vector<Vec2px>> positions;
    positions.reserve(sources.size());
    for (std::size_t b = 0; b < sources.size(); ++b)
        positions.push_back(sample_positions(per_quadrant, manifest.ranges.position,
                                             derive_seed(manifest.seed, {0x905, b})));

    const std::size_t n = manifest.sample_count();
    const std::size_t per_pass = sources.size() * static_cast<std::size_t>(manifest.positions_per_image);
    DatasetSummary summary;
    summary.sample_count = n;
    summary.samples.resize(n);

    unsigned workers = manifest.threads ? manifest.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](unsigned w) {
        try {
            for (std::size_t i = w; i < n; i += workers) {
                const std::size_t within = i % per_pass;
                const std::size_t b = within / static_cast<std::size_t>(manifest.positions_per_image);
                const std::size_t p = within % static_cast<std::size_t>(manifest.positions_per_image);
                summary.samples[i] = synthesize_sample(backgrounds[b], sources[b], positions[b][p], manifest.ranges,
                                                       mask, derive_seed(manifest.seed, {0x5A, i}), out,
                                                       sample_file_name(i), manifest.camera, manifest.downsample);
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work, w);
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    {
        std::ofstream labels(out / "labels.jsonl", std::ios::trunc);
        for (std::size_t i = 0; i < n; ++i)
            labels << to_json(summary.samples[i], i).dump() << "\n";
        if (!labels)
            throw std::runtime_error("failed writing labels.jsonl");
    }
    {
        auto resolved = to_json(manifest);
        resolved["resolved_backgrounds"] = sources;
        std::ofstream mf(out / "manifest.json", std::ios::trunc);
        mf << resolved.dump(2) << "\n";
        if (!mf)
            throw std::runtime_error("failed writing manifest.json");
    }
    fs::remove(marker);
    return summary;
}

struct LabelRecord {
    std::size_t index = 0;
    std::string image;
    Vec2px label;
    int darkness = 0;
    int diameter = 0;
    std::string background;
};

inline std::vector<LabelRecord> read_labels(const std::filesystem::path& dataset_dir) {
    std::ifstream f(dataset_dir / "labels.jsonl");
    if (!f)
        throw std::runtime_error("cannot read " + (dataset_dir / "labels.jsonl").string());
    std::vector<LabelRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty())
            continue;
        const auto j = nlohmann::json::parse(line);
        out.push_back({j.at("index").get<std::size_t>(), j.at("image").get<std::string>(),
                       {j.at("x").get<double>(), j.at("y").get<double>()}, j.value("darkness", 0),
                       j.value("diameter", 0), j.value("background", std::string())});
    }
    return out;
}

}  // namespace pih

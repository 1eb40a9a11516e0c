#pragma once

// Predictor evaluation: per-image MSE, outlier ratio and quadrant accuracy.

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "pih/dataset.hpp"
#include "pih/image.hpp"
#include "pih/predictor.hpp"
#include "pih/world.hpp"

namespace pih {

struct PredictionSample {
    Vec2px label;
    Vec2px predicted;

    double mse() const { return per_image_mse(predicted, label); }
    bool outlier() const { return mse() > kOutlierMse; }
    /// On-axis predictions or labels never match.
    bool quadrant_match() const {
        const auto a = quadrant_of(label);
        const auto b = quadrant_of(predicted);
        return a && b && *a == *b;
    }
};

struct MetricsReport {
    double mse_all = 0.0;
    double mse_no_outlier = 0.0;
    double mse_outlier_mean = 0.0;
    double r_outlier = 0.0;
    double r_quadrant = 0.0;
    std::size_t n = 0;
    std::size_t n_outlier = 0;
};

inline MetricsReport compute_metrics(std::span<const PredictionSample> samples) {
    if (samples.empty())
        throw std::invalid_argument("cannot evaluate an empty prediction set");
    MetricsReport r;
    r.n = samples.size();
    double sum_all = 0.0, sum_in = 0.0, sum_out = 0.0;
    std::size_t quadrant_hits = 0;
    for (const auto& s : samples) {
        const double e = s.mse();
        sum_all += e;
        if (e > kOutlierMse) {
            sum_out += e;
            ++r.n_outlier;
        } else {
            sum_in += e;
        }
        quadrant_hits += s.quadrant_match() ? 1 : 0;
    }
    const auto n = static_cast<double>(r.n);
    const std::size_t n_in = r.n - r.n_outlier;
    r.mse_all = sum_all / n;
    r.mse_no_outlier = n_in ? sum_in / static_cast<double>(n_in) : 0.0;
    r.mse_outlier_mean = r.n_outlier ? sum_out / static_cast<double>(r.n_outlier) : 0.0;
    r.r_outlier = static_cast<double>(r.n_outlier) / n;
    r.r_quadrant = static_cast<double>(quadrant_hits) / n;
    return r;
}

inline nlohmann::json to_json(const MetricsReport& r) {
    return {{"mse_all", r.mse_all},
            {"mse_no_outlier", r.mse_no_outlier},
            {"mse_outlier_mean", r.mse_outlier_mean},
            {"r_outlier", r.r_outlier},
            {"r_quadrant", r.r_quadrant},
            {"n", r.n},
            {"n_outlier", r.n_outlier}};
}

/// Runs `predictor` over every record of a generated dataset.
inline MetricsReport eval_predictor(const std::filesystem::path& dataset_dir, Predictor& predictor,
                                    std::vector<PredictionSample>* samples_out = nullptr) {
    const auto labels = read_labels(dataset_dir);
    if (labels.empty())
        throw std::invalid_argument("dataset has no samples: " + dataset_dir.string());
    std::vector<PredictionSample> samples;
    samples.reserve(labels.size());
    GrayImage img;
    for (const auto& rec : labels) {
        Observation obs;
        obs.true_label = rec.label;
        if (predictor.needs_image()) {
            img = read_pgm(dataset_dir / rec.image);
            obs.image = &img;
        }
        samples.push_back({rec.label, predictor.predict(obs).xy});
    }
    auto report = compute_metrics(samples);
    if (samples_out)
        *samples_out = std::move(samples);
    return report;
}

}  // namespace pih

#pragma once

// Hole-position predictors.  Every predictor maps the concatenated camera
// image to (x, y): the hole position relative to the peg center in pixels.

#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pih/camera.hpp"
#include "pih/dataset.hpp"
#include "pih/image.hpp"
#include "pih/rng.hpp"
#include "pih/world.hpp"

namespace pih {

/// Per-image error above which a prediction counts as an outlier (px^2).
inline constexpr double kOutlierMse = 200.0;

/// Mean of the squared per-axis errors of one prediction.
inline double per_image_mse(Vec2px predicted, Vec2px truth) {
    const double dx = predicted.x - truth.x;
    const double dy = predicted.y - truth.y;
    return (dx * dx + dy * dy) / 2.0;
}

struct Prediction {
    Vec2px xy;
    double latency = 0.0;  // simulated seconds
};

class PredictorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PredictorStats {
    double mse_no_outlier = 0.0;
    double r_outlier = 0.0;
    double r_quadrant = 1.0;

    void validate() const {
        if (!(mse_no_outlier >= 0.0))
            throw ConfigError("mse_no_outlier must be non-negative");
        if (!(r_outlier >= 0.0 && r_outlier <= 1.0) || !(r_quadrant >= 0.0 && r_quadrant <= 1.0))
            throw ConfigError("ratios must lie in [0,1]");
        if (mse_no_outlier > kOutlierMse)
            throw ConfigError("mse_no_outlier cannot exceed the outlier threshold");
    }
};

struct TableEntry {
    std::string_view training;
    std::string_view testing;
    double mse_all;
    PredictorStats stats;
};

/// Measured performance of the networks trained on each synthetic set.
inline constexpr std::array<TableEntry, 54> kPublishedStats{{
    {"Plain", "Plain", 95.0, {5.0, 0.054, 0.951}},
    {"Plain", "Light plain", 0.4, {0.4, 0.000, 0.999}},
    {"Plain", "Textures", 620.1, {17.2, 0.368, 0.721}},
    {"Plain", "Metallic", 609.0, {29.2, 0.383, 0.715}},
    {"Plain", "Scenery", 1396.9, {72.3, 0.791, 0.405}},
    {"Plain", "Food", 1133.5, {77.5, 0.744, 0.479}},
    {"Image", "Plain", 396.3, {12.3, 0.216, 0.819}},
    {"Image", "Light plain", 4.2, {3.8, 0.001, 0.992}},
    {"Image", "Textures", 185.9, {13.0, 0.114, 0.911}},
    {"Image", "Metallic", 134.4, {11.7, 0.072, 0.935}},
    {"Image", "Scenery", 119.1, {13.6, 0.070, 0.940}},
    {"Image", "Food", 101.0, {13.2, 0.065, 0.934}},
    {"Textures+Scenery(18)", "Plain", 511.9, {13.6, 0.282, 0.755}},
    {"Textures+Scenery(18)", "Light plain", 2.3, {2.0, 0.0004, 0.995}},
    {"Textures+Scenery(18)", "Textures", 352.9, {15.9, 0.199, 0.829}},
    {"Textures+Scenery(18)", "Metallic", 329.6, {16.2, 0.158, 0.854}},
    {"Textures+Scenery(18)", "Scenery", 288.5, {19.8, 0.158, 0.862}},
    {"Textures+Scenery(18)", "Food", 322.9, {25.9, 0.221, 0.824}},
    {"Textures+Scenery(30)", "Plain", 414.0, {9.7, 0.244, 0.791}},
    {"Textures+Scenery(30)", "Light plain", 0.99, {0.99, 0.000, 0.998}},
    {"Textures+Scenery(30)", "Textures", 241.1, {10.2, 0.140, 0.884}},
    {"Textures+Scenery(30)", "Metallic", 225.3, {11.0, 0.112, 0.903}},
    {"Textures+Scenery(30)", "Scenery", 196.4, {13.1, 0.107, 0.909}},
    {"Textures+Scenery(30)", "Food", 298.2, {17.5, 0.191, 0.845}},
    {"Textures+Scenery(45)", "Plain", 399.2, {13.4, 0.259, 0.804}},
    {"Textures+Scenery(45)", "Light plain", 2.9, {2.3, 0.001, 0.994}},
    {"Textures+Scenery(45)", "Textures", 378.9, {14.4, 0.210, 0.826}},
    {"Textures+Scenery(45)", "Metallic", 359.8, {14.5, 0.173, 0.855}},
    {"Textures+Scenery(45)", "Scenery", 332.1, {18.9, 0.176, 0.849}},
    {"Textures+Scenery(45)", "Food", 511.0, {23.0, 0.285, 0.772}},
    {"Textures+Scenery(90)", "Plain", 447.2, {12.1, 0.280, 0.780}},
    {"Textures+Scenery(90)", "Light plain", 9.3, {3.9, 0.006, 0.984}},
    {"Textures+Scenery(90)", "Textures", 389.2, {13.1, 0.213, 0.835}},
    {"Textures+Scenery(90)", "Metallic", 341.0, {13.8, 0.166, 0.863}},
    {"Textures+Scenery(90)", "Scenery", 345.6, {16.7, 0.185, 0.857}},
    {"Textures+Scenery(90)", "Food", 380.2, {17.6, 0.210, 0.828}},
    {"Textures(45)", "Plain", 383.4, {11.0, 0.234, 0.807}},
    {"Textures(45)", "Light plain", 1.9, {1.9, 0.000, 0.992}},
    {"Textures(45)", "Textures", 315.7, {12.3, 0.167, 0.860}},
    {"Textures(45)", "Metallic", 310.1, {14.2, 0.151, 0.863}},
    {"Textures(45)", "Scenery", 369.0, {18.6, 0.185, 0.837}},
    {"Textures(45)", "Food", 457.3, {26.9, 0.287, 0.781}},
    {"Metallic(45)", "Plain", 495.8, {12.5, 0.299, 0.766}},
    {"Metallic(45)", "Light plain", 7.4, {3.2, 0.006, 0.991}},
    {"Metallic(45)", "Textures", 409.5, {12.8, 0.241, 0.814}},
    {"Metallic(45)", "Metallic", 350.9, {15.0, 0.192, 0.858}},
    {"Metallic(45)", "Scenery", 450.7, {19.0, 0.244, 0.808}},
    {"Metallic(45)", "Food", 514.0, {22.0, 0.282, 0.775}},
    {"Scenery(45)", "Plain", 500.0, {14.4, 0.282, 0.769}},
    {"Scenery(45)", "Light plain", 11.7, {4.6, 0.007, 0.992}},
    {"Scenery(45)", "Textures", 318.7, {15.3, 0.203, 0.862}},
    {"Scenery(45)", "Metallic", 310.4, {16.0, 0.174, 0.877}},
    {"Scenery(45)", "Scenery", 285.2, {18.9, 0.172, 0.890}},
    {"Scenery(45)", "Food", 395.4, {21.0, 0.236, 0.836}},
}};

inline PredictorStats published_stats(std::string_view training, std::string_view testing) {
    for (const auto& e : kPublishedStats)
        if (e.training == training && e.testing == testing)
            return e.stats;
    throw ConfigError("no published statistics for " + std::string(training) + " / " + std::string(testing));
}

/// What the predictor is shown.  `image` may be null for predictors that
/// do not look at pixels; `true_label` is empty when the hole is out of view.
struct Observation {
    const GrayImage* image = nullptr;
    std::optional<Vec2px> true_label;
};

class Predictor {
public:
    virtual ~Predictor() = default;
    virtual Prediction predict(const Observation& obs) = 0;
    virtual bool needs_image() const { return false; }
    virtual std::string name() const = 0;
};

inline void check_image(const GrayImage& img) {
    if (img.width != kViewSize || img.height != kViewSize ||
        img.pixels.size() != static_cast<std::size_t>(kViewSize * kViewSize))
        throw PredictorError("predictor input must be a 160x160 grayscale image");
}

inline Prediction oracle_predict(const WorldState& world, FrameScale scale) {
    return {ground_truth_label(world, scale), 0.0};
}

class OraclePredictor final : public Predictor {
public:
    explicit OraclePredictor(double latency = 1.0) : latency_(latency) {}

    Prediction predict(const Observation& obs) override {
        if (obs.image)
            check_image(*obs.image);
        if (!obs.true_label)
            throw PredictorError("oracle: hole outside the camera view");
        return {*obs.true_label, latency_};
    }
    std::string name() const override { return "oracle"; }

private:
    double latency_;
};

/// Gaussian-plus-outlier error model.  Outliers are uniform over the
/// position range, conditioned on per-image MSE above the threshold;
/// inliers carry per-axis N(0, mse_no_outlier) error, conditioned below it.
inline Vec2px stochastic_predict(Vec2px true_label, const PredictorStats& stats, Interval position_range,
                                 Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < stats.r_outlier) {
        std::uniform_real_distribution<double> pos(position_range.lo, position_range.hi);
        for (int attempt = 0; attempt < 100000; ++attempt) {
            const Vec2px p{pos(rng), pos(rng)};
            if (per_image_mse(p, true_label) > kOutlierMse)
                return p;
        }
        // Unreachable for the default range; fall back to a far corner.
        return {-sgn(true_label.x) * position_range.hi, -sgn(true_label.y) * position_range.hi};
    }
    if (stats.mse_no_outlier <= 0.0)
        return true_label;
    std::normal_distribution<double> err(0.0, std::sqrt(stats.mse_no_outlier));
    for (;;) {
        const Vec2px p{true_label.x + err(rng), true_label.y + err(rng)};
        if (per_image_mse(p, true_label) <= kOutlierMse)
            return p;
    }
}

class StochasticPredictor final : public Predictor {
public:
    StochasticPredictor(PredictorStats stats, std::uint64_t seed, double latency = 1.0,
                        Interval position_range = {-66.0, 66.0})
        : stats_(stats), range_(position_range), latency_(latency), rng_(make_rng(seed)) {
        stats_.validate();
    }

    Prediction predict(const Observation& obs) override {
        if (obs.image)
            check_image(*obs.image);
        if (!obs.true_label) {
            // Nothing to see: the output is as good as a random guess.
            std::uniform_real_distribution<double> pos(range_.lo, range_.hi);
            return {{pos(rng_), pos(rng_)}, latency_};
        }
        return {stochastic_predict(*obs.true_label, stats_, range_, rng_), latency_};
    }
    std::string name() const override { return "stochastic"; }
    const PredictorStats& stats() const { return stats_; }

private:
    PredictorStats stats_;
    Interval range_;
    double latency_;
    Rng rng_;
};

}  // namespace pih

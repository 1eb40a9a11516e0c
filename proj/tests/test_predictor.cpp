#include <catch_amalgamated.hpp>

#include <cmath>

#include "pih/dataset.hpp"
#include "pih/metrics.hpp"
#include "pih/predictor.hpp"

using namespace pih;
using Catch::Approx;

TEST_CASE("per-image MSE and the outlier threshold") {
    CHECK(per_image_mse({20, 10}, {0, 0}) == 250.0);
    CHECK(per_image_mse({3, -4}, {0, 0}) == 12.5);
    CHECK(per_image_mse({20, 0}, {0, 0}) == 200.0);
    CHECK(kOutlierMse == 200.0);
}

TEST_CASE("published statistics table") {
    CHECK(kPublishedStats.size() == 54);
    const auto s = published_stats("Plain", "Plain");
    CHECK(s.mse_no_outlier == 5.0);
    CHECK(s.r_outlier == 0.054);
    CHECK(s.r_quadrant == 0.951);
    const auto w = published_stats("Image", "Light plain");
    CHECK(w.mse_no_outlier == 3.8);
    CHECK(w.r_outlier == 0.001);
    CHECK(published_stats("Scenery(45)", "Food").r_quadrant == 0.836);
    CHECK_THROWS_AS(published_stats("Image", "Sky"), ConfigError);
    for (const auto& e : kPublishedStats) {
        CHECK_NOTHROW(e.stats.validate());
        // Coherence of the published columns: the all-image mean is at
        // least the outlier share times the threshold.
        CHECK(e.mse_all >= e.stats.r_outlier * kOutlierMse - 1e-9);
    }
}

TEST_CASE("oracle predictor") {
    OraclePredictor p(0.5);
    Observation obs;
    obs.true_label = Vec2px{-12, 30};
    const auto out = p.predict(obs);
    CHECK(out.xy == Vec2px{-12, 30});
    CHECK(out.latency == 0.5);
    CHECK_THROWS_AS(p.predict(Observation{}), PredictorError);
    GrayImage wrong(10, 10);
    obs.image = &wrong;
    CHECK_THROWS_AS(p.predict(obs), PredictorError);
}

TEST_CASE("stochastic predictor: inliers stay below the threshold") {
    PredictorStats s{5.0, 0.0, 1.0};
    Rng rng = make_rng(3);
    double sum = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const Vec2px truth{static_cast<double>(i % 60 + 1), -7.0};
        const auto p = stochastic_predict(truth, s, {-66, 66}, rng);
        const double e = per_image_mse(p, truth);
        REQUIRE(e <= kOutlierMse);
        sum += e;
    }
    CHECK(sum / n == Approx(5.0).epsilon(0.03));
}

TEST_CASE("stochastic predictor: outliers are far and inside the range") {
    PredictorStats s{5.0, 1.0, 0.5};
    Rng rng = make_rng(4);
    for (int i = 0; i < 5000; ++i) {
        const auto p = stochastic_predict({10, 10}, s, {-66, 66}, rng);
        REQUIRE(per_image_mse(p, {10, 10}) > kOutlierMse);
        REQUIRE(std::abs(p.x) <= 66);
        REQUIRE(std::abs(p.y) <= 66);
    }
}

TEST_CASE("stochastic predictor is seeded") {
    StochasticPredictor a(published_stats("Image", "Scenery"), 9), b(published_stats("Image", "Scenery"), 9);
    Observation obs;
    obs.true_label = Vec2px{5, 5};
    for (int i = 0; i < 100; ++i)
        REQUIRE(a.predict(obs).xy == b.predict(obs).xy);
    // Out of view: an uninformed guess within the range.
    const auto guess = a.predict(Observation{});
    CHECK(std::abs(guess.xy.x) <= 66);
}

TEST_CASE("stats validation") {
    CHECK_THROWS_AS((PredictorStats{-1, 0, 1}).validate(), ConfigError);
    CHECK_THROWS_AS((PredictorStats{1, 1.5, 1}).validate(), ConfigError);
    CHECK_THROWS_AS((PredictorStats{1, 0, 2}).validate(), ConfigError);
}

// Expected quadrant accuracy of the error model over the sampled label
// positions, computed by direct numerical integration.
static double expected_quadrant_rate(const std::vector<Vec2px>& labels, PredictorStats s) {
    const double sigma = std::sqrt(s.mse_no_outlier);
    auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    double total = 0;
    for (const auto& l : labels) {
        const double p_in = phi(std::abs(l.x) / sigma) * phi(std::abs(l.y) / sigma);
        // Outlier: uniform over the square minus the 20 px disc around l.
        int same = 0, all = 0;
        for (double x = -65.75; x < 66; x += 0.5)
            for (double y = -65.75; y < 66; y += 0.5) {
                if (per_image_mse({x, y}, l) <= kOutlierMse)
                    continue;
                ++all;
                same += (x > 0) == (l.x > 0) && (y > 0) == (l.y > 0);
            }
        total += (1 - s.r_outlier) * p_in + s.r_outlier * same / static_cast<double>(all);
    }
    return total / static_cast<double>(labels.size());
}

TEST_CASE("stochastic predictor quadrant accuracy matches the integrated model") {
    const auto stats = published_stats("Image", "Scenery");
    const auto labels = sample_positions(146, {-66, 66}, 21);
    const double expected = expected_quadrant_rate(labels, stats);

    StochasticPredictor p(stats, 5);
    std::vector<PredictionSample> samples;
    for (int rep = 0; rep < 200; ++rep)
        for (const auto& l : labels) {
            Observation obs;
            obs.true_label = l;
            samples.push_back({l, p.predict(obs).xy});
        }
    const auto r = compute_metrics(samples);
    CHECK(r.r_quadrant == Approx(expected).margin(0.004));
    CHECK(r.r_outlier == Approx(stats.r_outlier).margin(0.004));
    CHECK(r.mse_no_outlier == Approx(stats.mse_no_outlier).epsilon(0.03));
    // Gaussian errors on this label set land somewhat below the published
    // quadrant rate: the model reproduces MSE and outlier share exactly and
    // quadrant accuracy only approximately.
    CHECK(expected == Approx(stats.r_quadrant).margin(0.04));
}

#include <catch_amalgamated.hpp>

#include "pih/dataset.hpp"
#include "pih/metrics.hpp"

using namespace pih;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {
void check_coherence(const MetricsReport& r) {
    CHECK(r.r_outlier * kOutlierMse <= r.mse_all + 1e-9);
    const double mix = (1 - r.r_outlier) * r.mse_no_outlier + r.r_outlier * r.mse_outlier_mean;
    CHECK(std::abs(mix - r.mse_all) <= 1e-9 * std::max(1.0, r.mse_all));
    if (r.r_outlier > 0)
        CHECK(r.mse_no_outlier <= r.mse_all);
    CHECK(r.r_outlier >= 0);
    CHECK(r.r_outlier <= 1);
    CHECK(r.r_quadrant >= 0);
    CHECK(r.r_quadrant <= 1);
}
}  // namespace

TEST_CASE("perfect predictions") {
    std::vector<PredictionSample> s{{{3, 4}, {3, 4}}, {{-1, 9}, {-1, 9}}};
    const auto r = compute_metrics(s);
    CHECK(r.mse_all == 0);
    CHECK(r.r_outlier == 0);
    CHECK(r.r_quadrant == 1);
    CHECK(r.n == 2);
    check_coherence(r);
}

TEST_CASE("single outlier sample") {
    std::vector<PredictionSample> s{{{0, 0}, {20, 10}}};
    const auto r = compute_metrics(s);
    CHECK(r.mse_all == 250);
    CHECK(r.r_outlier == 1);
    CHECK(r.n_outlier == 1);
    CHECK(r.mse_no_outlier == 0);
    CHECK(r.mse_outlier_mean == 250);
    check_coherence(r);
}

TEST_CASE("axis predictions count as quadrant mismatches") {
    std::vector<PredictionSample> s{{{5, 5}, {0, 5}}, {{5, 5}, {5, 5}}, {{-5, 5}, {5, 5}}, {{5, -5}, {1, -1}}};
    const auto r = compute_metrics(s);
    CHECK(r.r_quadrant == 0.5);
}

TEST_CASE("hand-computed mixture") {
    // Errors: (2,0) -> 2, (0,4) -> 8, (30,0) -> 450, (0,0) -> 0.
    std::vector<PredictionSample> s{{{10, 10}, {12, 10}}, {{10, 10}, {10, 14}}, {{10, 10}, {40, 10}}, {{10, 10}, {10, 10}}};
    const auto r = compute_metrics(s);
    CHECK(r.mse_all == Approx(115.0));
    CHECK(r.mse_no_outlier == Approx(10.0 / 3));
    CHECK(r.r_outlier == 0.25);
    CHECK(r.mse_outlier_mean == 450);
    check_coherence(r);
}

TEST_CASE("empty evaluation set is an error") {
    CHECK_THROWS_AS(compute_metrics({}), std::invalid_argument);
}

TEST_CASE("coherence holds on random reports") {
    Rng rng = make_rng(1);
    std::normal_distribution<double> e(0, 12);
    for (int k = 0; k < 20; ++k) {
        std::vector<PredictionSample> s;
        for (int i = 0; i < 500; ++i) {
            const Vec2px l{static_cast<double>(i % 50 + 1), -static_cast<double>(i % 30 + 1)};
            s.push_back({l, {l.x + e(rng), l.y + e(rng)}});
        }
        check_coherence(compute_metrics(s));
    }
}

TEST_CASE("eval_predictor over a generated dataset") {
    const auto dir = fs::temp_directory_path() / "pih_test_metrics";
    fs::remove_all(dir);
    DatasetManifest m = recipe("test:Plain", 2, 8);
    m.categories[0].count = 3;
    m.downsample = 1;
    m.threads = 1;
    generate_dataset(m, dir, make_procedural_mask({}, {}));

    OraclePredictor oracle;
    std::vector<PredictionSample> out;
    const auto r = eval_predictor(dir, oracle, &out);
    CHECK(r.n == 24);
    CHECK(out.size() == 24);
    CHECK(r.mse_all == 0);
    CHECK(r.r_outlier == 0);
    CHECK(r.r_quadrant == 1);

    StochasticPredictor noisy(published_stats("Plain", "Textures"), 3);
    const auto r2 = eval_predictor(dir, noisy);
    CHECK(r2.n == 24);
    check_coherence(r2);

    std::ofstream(dir / "labels.jsonl", std::ios::trunc);
    CHECK_THROWS_AS(eval_predictor(dir, oracle), std::invalid_argument);
    fs::remove_all(dir);
}

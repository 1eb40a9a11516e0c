#include <catch_amalgamated.hpp>

#include <sstream>

#include "pih/servo.hpp"

using namespace pih;
using Catch::Approx;

namespace {
/// Returns scripted predictions in order, or a transform of the truth.
class ScriptedPredictor final : public Predictor {
public:
    explicit ScriptedPredictor(std::vector<Vec2px> script, double latency = 1.0)
        : script_(std::move(script)), latency_(latency) {}
    Prediction predict(const Observation&) override { return {script_.at(i_++), latency_}; }
    std::string name() const override { return "scripted"; }

private:
    std::vector<Vec2px> script_;
    std::size_t i_ = 0;
    double latency_;
};

class ScaledTruth final : public Predictor {
public:
    ScaledTruth(double sx, double sy) : sx_(sx), sy_(sy) {}
    Prediction predict(const Observation& obs) override {
        return {{obs.true_label->x * sx_, obs.true_label->y * sy_}, 1.0};
    }
    std::string name() const override { return "scaled"; }

private:
    double sx_, sy_;
};

ServoTrace run_from(Vec2mm start, Predictor& p, ServoParams params = {}, double deadline = 1e9,
                    WorldState* out = nullptr) {
    WorldState w;
    w.peg_offset = start;
    const auto scene = default_scene();
    auto trace = run_servoing(w, p, scene, params, 2.0, deadline);
    if (out)
        *out = w;
    return trace;
}
}  // namespace

TEST_CASE("step schedule") {
    ServoParams p;
    CHECK(lambda_at(0, p) == 10.0);
    CHECK(lambda_at(1, p) == 9.0);
    CHECK(lambda_at(4, p) == 6.0);
    CHECK(lambda_at(10, p) == 0.0);
    CHECK_THROWS_AS(lambda_at(11, p), std::out_of_range);
    CHECK_THROWS_AS(lambda_at(-1, p), std::out_of_range);
    ServoParams q{5.0, 4, 3};
    CHECK(lambda_at(2, q) == 2.5);
}

TEST_CASE("servo params validation") {
    CHECK_THROWS_AS((ServoParams{0.0, 10, 5}).validate(), ConfigError);
    CHECK_THROWS_AS((ServoParams{10.0, 10, 10}).validate(), ConfigError);
    CHECK_THROWS_AS((ServoParams{10.0, 0, 0}).validate(), ConfigError);
    CHECK_NOTHROW((ServoParams{10.0, 10, 0}).validate());
}

TEST_CASE("single step moves toward the predicted quadrant") {
    ServoParams p;
    // Hole up-right of the peg: the peg moves +x, +y.
    CHECK(servo_step({-20, -20}, {33, 33}, 0, p) == Vec2mm{-10, -10});
    CHECK(servo_step({5, 5}, {-8, -8}, 1, p) == Vec2mm{-4, -4});
    CHECK(servo_step({5, 5}, {0, -8}, 2, p) == Vec2mm{5, -3});
    CHECK(servo_step({5, 5}, {-100, 0.001}, 4, p) == Vec2mm{-1, 11});
    CHECK_THROWS_AS(servo_step({0, 0}, {1, 1}, 10, p), std::out_of_range);
}

TEST_CASE("hand-traced oracle run from (20, -5)") {
    OraclePredictor oracle;
    WorldState w;
    const auto trace = run_from({20, -5}, oracle, {}, 1e9, &w);
    REQUIRE(trace.records.size() == 5);
    const std::vector<Vec2mm> expected{{10, 5}, {1, -4}, {-7, 4}, {0, -3}, {0, 3}};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(trace.records[i].offset_after == expected[i]);
        CHECK(trace.records[i].t == static_cast<int>(i));
        CHECK(trace.records[i].lambda == 10.0 - static_cast<double>(i));
    }
    CHECK(trace.records[0].prediction == Vec2px{-33, 8});
    CHECK(trace.records[0].quadrant == Quadrant::Topleft);
    CHECK_FALSE(trace.records[4].quadrant.has_value());
    CHECK(trace.records[4].step == Vec2mm{0, 6});
    CHECK(w.peg_offset == Vec2mm{0, 3});
    CHECK(w.sim_time == 15.0);
    CHECK(trace.records[2].sim_time == 9.0);
    CHECK(trace.abort == ServoAbort::None);
}

TEST_CASE("wrong signs push the peg away") {
    ScriptedPredictor wrong(std::vector<Vec2px>(5, Vec2px{5, 5}));
    ServoParams p{9.0, 10, 1};
    WorldState w;
    run_from({1, 1}, wrong, p, 1e9, &w);
    CHECK(w.peg_offset == Vec2mm{10, 10});
}

TEST_CASE("n_run = 0 leaves the peg alone") {
    OraclePredictor oracle;
    WorldState w;
    const auto trace = run_from({12, -7}, oracle, {10.0, 10, 0}, 1e9, &w);
    CHECK(trace.records.empty());
    CHECK(w.peg_offset == Vec2mm{12, -7});
    CHECK(w.sim_time == 0.0);
}

TEST_CASE("oracle servo bound on a grid of starts") {
    OraclePredictor oracle;
    for (int x = -40; x <= 40; x += 4)
        for (int y = -40; y <= 40; y += 5) {
            WorldState w;
            run_from({x + 0.37, y - 0.21}, oracle, {}, 1e9, &w);
            REQUIRE(std::abs(w.peg_offset.x) <= 6.0);
            REQUIRE(std::abs(w.peg_offset.y) <= 6.0);
        }
}

TEST_CASE("sign-only dependence") {
    OraclePredictor oracle;
    ScaledTruth scaled(7.5, 0.01);
    const auto a = run_from({23.8, -13.1}, oracle);
    const auto b = run_from({23.8, -13.1}, scaled);
    CHECK(same_motion(a, b));
    CHECK_FALSE(a.records[0].prediction == b.records[0].prediction);

    ScaledTruth flipped(-1.0, 1.0);
    CHECK_FALSE(same_motion(a, run_from({23.8, -13.1}, flipped)));
    ScriptedPredictor slow(std::vector<Vec2px>(5, Vec2px{-1, 1}), 1.5);
    ScriptedPredictor fast(std::vector<Vec2px>(5, Vec2px{-1, 1}), 1.0);
    CHECK_FALSE(same_motion(run_from({3, 3}, slow), run_from({3, 3}, fast)));
}

TEST_CASE("workspace abort") {
    ScriptedPredictor away(std::vector<Vec2px>(5, Vec2px{1, 1}));
    WorldState w;
    const auto trace = run_from({95, 0}, away, {}, 1e9, &w);
    CHECK(trace.abort == ServoAbort::Workspace);
    CHECK(trace.records.empty());
    CHECK(w.peg_offset == Vec2mm{95, 0});
}

TEST_CASE("budget abort charges exactly up to the deadline") {
    OraclePredictor oracle;
    WorldState w;
    const auto trace = run_from({20, 20}, oracle, {}, 7.0, &w);
    CHECK(trace.abort == ServoAbort::Budget);
    CHECK(trace.records.size() == 2);
    CHECK(w.sim_time == 7.0);
}

TEST_CASE("out-of-view hole makes the oracle fail") {
    OraclePredictor oracle;
    CHECK_THROWS_AS(run_from({60, 0}, oracle), PredictorError);
}

TEST_CASE("trace serialization") {
    OraclePredictor oracle;
    const auto trace = run_from({20, -5}, oracle);
    std::ostringstream os;
    write_jsonl(os, trace, 4);
    std::istringstream in(os.str());
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("episode") == 4);
        CHECK(j.at("t") == n);
        ++n;
    }
    CHECK(n == 5);
}

TEST_CASE("rendered observations feed image-based predictors") {
    class NeedsImage final : public Predictor {
    public:
        int seen = 0;
        Prediction predict(const Observation& obs) override {
            REQUIRE(obs.image);
            CHECK(obs.image->width == 160);
            ++seen;
            return {*obs.true_label, 0.0};
        }
        bool needs_image() const override { return true; }
        std::string name() const override { return "img"; }
    } p;
    run_from({10, 10}, p);
    CHECK(p.seen == 5);
}

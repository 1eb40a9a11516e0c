#include <catch_amalgamated.hpp>

#include <cmath>

#include "pih/backgrounds.hpp"
#include "pih/camera.hpp"

using namespace pih;
using Catch::Approx;

namespace {
RenderParams quiet(Vec2px hole, double diameter = 20.0, int darkness = 10) {
    RenderParams p;
    p.hole_center = hole;
    p.hole_diameter_px = diameter;
    p.hole_darkness = darkness;
    p.noise_sigma = 0.0;
    return p;
}
}  // namespace

TEST_CASE("procedural gripper mask geometry") {
    const auto m = make_procedural_mask({}, {});
    REQUIRE(m.image.width == kViewSize);
    REQUIRE(m.image.height == kViewSize);
    CHECK(m.peg_center == Vec2px{80.0, 80.0});
    // 10 mm at 1.65 px/mm rounds to 17 px: columns 72..88.
    CHECK(m.image.at(72, 40) == 0);
    CHECK(m.image.at(88, 40) == 0);
    CHECK(m.image.at(71, 40) == 255);
    CHECK(m.image.at(89, 40) == 255);
    CHECK(m.image.at(80, 80) == 0);
    CHECK(m.image.at(80, 81) == 255);
    // Fingers are mirror images about column 80.
    for (int y = 0; y < kViewSize; ++y)
        for (int x = 1; x < kViewSize; ++x)
            REQUIRE(m.image.at(x, y) == m.image.at(160 - x, y));
    CHECK(m.image.at(50, 10) == 0);
    CHECK(m.image.at(110, 10) == 0);
    CHECK(m.image.at(50, 100) == 255);
}

TEST_CASE("mask file round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "pih_test_mask";
    std::filesystem::create_directories(dir);
    const auto m = make_procedural_mask({}, {});
    write_mask(dir / "mask.pgm", m);
    const auto back = read_mask(dir / "mask.pgm");
    CHECK(back.image == m.image);
    CHECK(back.peg_center == m.peg_center);
    std::filesystem::remove(dir / "mask.pgm.json");
    CHECK_THROWS(read_mask(dir / "mask.pgm"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("ground truth labels are rounded hole-minus-peg pixels") {
    WorldState w;
    w.peg_offset = {10.0, -5.0};
    CHECK(ground_truth_label(w, {}) == Vec2px{-17.0, 8.0});  // -16.5 -> -17, 8.25 -> 8
    w.peg_offset = {1.0, 0.0};
    CHECK(ground_truth_label(w, {}) == Vec2px{-2.0, 0.0});
    w.peg_offset = {-40.0, 40.0};
    CHECK(ground_truth_label(w, {}) == Vec2px{66.0, -66.0});
    w.peg_offset = {48.0, 0.0};  // -79.2 -> -79
    CHECK(ground_truth_label(w, {}).x == -79.0);
    w.peg_offset = {49.0, 0.0};  // -80.85 -> -81
    CHECK_THROWS_AS(ground_truth_label(w, {}), std::out_of_range);
}

TEST_CASE("hole disc placement in both halves") {
    const GrayImage bg(kViewSize, kViewSize, 200);
    GripperMask empty{GrayImage(kViewSize, kViewSize, 255), {80, 80}};
    const auto img = render_concat_view(bg, empty, quiet({10, 30}, 4.0));
    // First half: column 40 + x, row 80 - y.
    CHECK(img.at(50, 50) == 10);
    CHECK(img.at(52, 50) == 10);
    CHECK(img.at(53, 50) == 200);
    // Second half mirrored: local column 40 - x.
    CHECK(img.at(80 + 30, 50) == 10);
    CHECK(img.at(80 + 50, 50) == 200);
    CHECK(img.at(40, 80) == 200);
}

TEST_CASE("gripper overlay and background halves") {
    GrayImage bg(kViewSize, kViewSize, 0);
    for (int y = 0; y < kViewSize; ++y)
        for (int x = 0; x < kViewSize; ++x)
            bg.at(x, y) = static_cast<std::uint8_t>(x);
    const auto mask = make_procedural_mask({}, {});
    CameraConfig cam;
    const auto img = render_concat_view(bg, mask, quiet({60, -60}, 10.0), cam);
    // The peg occupies the center column of each half above row 80.
    CHECK(img.at(40, 20) == cam.gripper_intensity);
    CHECK(img.at(120, 20) == cam.gripper_intensity);
    // Below the peg tip the background shows through; the second half is
    // taken from the right edge of the background.
    CHECK(img.at(10, 150) == 10);
    CHECK(img.at(90, 150) == 90);
    CHECK_THROWS_AS(render_concat_view(GrayImage(79, 160), mask, quiet({})), std::invalid_argument);
}

TEST_CASE("hole drawn under the peg is hidden by it") {
    const GrayImage bg(kViewSize, kViewSize, 200);
    const auto mask = make_procedural_mask({}, {});
    const auto img = render_concat_view(bg, mask, quiet({0, 20}, 6.0));
    CHECK(img.at(40, 60) == 40);
}

TEST_CASE("noise is seeded and has the configured spread") {
    const GrayImage bg(kViewSize, kViewSize, 128);
    GripperMask empty{GrayImage(kViewSize, kViewSize, 255), {80, 80}};
    RenderParams p = quiet({70, 70}, 1.0);
    p.noise_sigma = 8.0;
    p.seed = 11;
    const auto a = render_concat_view(bg, empty, p);
    const auto b = render_concat_view(bg, empty, p);
    CHECK(a == b);
    p.seed = 12;
    CHECK_FALSE(render_concat_view(bg, empty, p) == a);

    double sum = 0, sq = 0;
    for (auto v : a.pixels) {
        sum += v - 128.0;
        sq += (v - 128.0) * (v - 128.0);
    }
    const double n = static_cast<double>(a.pixels.size());
    CHECK(std::abs(sum / n) < 0.2);
    // Rounding adds 1/12 to the variance.
    CHECK(std::sqrt(sq / n - (sum / n) * (sum / n)) == Approx(std::sqrt(64.0 + 1.0 / 12)).epsilon(0.03));
}

TEST_CASE("normal quantile table") {
    const auto& q = detail::normal_quantiles();
    CHECK(q[32768] == Approx(0.5 / 65536 * std::sqrt(2 * M_PI)).margin(1e-9));
    for (std::size_t i = 0; i < 100; ++i)
        CHECK(q[i] == Approx(-q[65535 - i]).margin(1e-9));
    // Phi^-1(0.975) = 1.959964
    CHECK(q[static_cast<std::size_t>(0.975 * 65536)] == Approx(1.959964).margin(1e-3));
    for (std::size_t i = 1; i < q.size(); ++i)
        REQUIRE(q[i] > q[i - 1]);
}

TEST_CASE("render params validation") {
    RenderParams p;
    p.hole_darkness = 300;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.hole_diameter_px = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK_THROWS_AS(camera_config_from_json({{"gripper_intensity", -1}}), ConfigError);
}

TEST_CASE("procedural backgrounds") {
    CHECK(procedural_pool_size(BackgroundCategory::Plain) == 90);
    CHECK(procedural_pool_size(BackgroundCategory::LightPlain) == 35);
    CHECK(plain_intensity(BackgroundCategory::Plain, 0) == 0);
    CHECK(plain_intensity(BackgroundCategory::Plain, 89) == 255);
    CHECK(plain_intensity(BackgroundCategory::LightPlain, 0) == 125);
    CHECK(plain_intensity(BackgroundCategory::LightPlain, 34) == 255);
    for (auto c : kAllCategories) {
        const auto a = procedural_background(c, 3);
        CHECK(a.width == kViewSize);
        CHECK(a == load_background(procedural_source(c, 3)));
        CHECK(category_from_string(to_string(c)) == c);
    }
    CHECK_FALSE(procedural_background(BackgroundCategory::Scenery, 1) ==
                procedural_background(BackgroundCategory::Scenery, 2));
    CHECK_THROWS_AS(load_background("procedural:Nope:1"), ConfigError);
    CHECK_THROWS_AS(procedural_background(BackgroundCategory::Plain, 90), std::out_of_range);
}

#pragma once

// Procedural stand-in for the two in-hand cameras.
//
// Each camera contributes a 160 (h) x 80 (w) crop centered on the peg; the
// crops are placed side by side to form the 160 x 160 network input.  The
// second camera looks at the peg from the opposite side, so its horizontal
// axis is reversed.  Hole positions are given in label pixels: (x, y) of the
// hole relative to the peg center, +y up.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "pih/image.hpp"
#include "pih/rng.hpp"
#include "pih/world.hpp"

namespace pih {

inline constexpr int kViewSize = 160;
inline constexpr int kHalfWidth = kViewSize / 2;
/// Largest label component that still lies inside the crop.
inline constexpr double kLabelLimitPx = 80.0;

struct GripperMask {
    GrayImage image;    // 0 = gripper/peg, 255 = transparent
    Vec2px peg_center;  // column, row of the peg center within `image`
};

struct RenderParams {
    Vec2px hole_center{};          // label pixels
    double hole_diameter_px = 20.0;
    int hole_darkness = 10;
    double noise_sigma = 8.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(hole_diameter_px > 0.0))
            throw ConfigError("hole diameter must be positive");
        if (hole_darkness < 0 || hole_darkness > 255)
            throw ConfigError("hole darkness must be in [0,255]");
        if (!(noise_sigma >= 0.0))
            throw ConfigError("noise sigma must be non-negative");
    }
};

/// Renderer settings that stay fixed across samples.
struct CameraConfig {
    int gripper_intensity = 40;
    double noise_sigma = 8.0;
    /// Crop pixels per label pixel; 1.0 draws the hole exactly at the label.
    double view_px_per_label_px = 1.0;

    void validate() const {
        if (gripper_intensity < 0 || gripper_intensity > 255)
            throw ConfigError("gripper intensity must be in [0,255]");
        if (!(noise_sigma >= 0.0))
            throw ConfigError("noise sigma must be non-negative");
        if (!(view_px_per_label_px > 0.0))
            throw ConfigError("view_px_per_label_px must be positive");
    }
};

inline CameraConfig camera_config_from_json(const nlohmann::json& j) {
    CameraConfig c;
    c.gripper_intensity = json_get(j, "gripper_intensity", c.gripper_intensity);
    c.noise_sigma = json_get(j, "noise_sigma", c.noise_sigma);
    c.view_px_per_label_px = json_get(j, "view_px_per_label_px", c.view_px_per_label_px);
    c.validate();
    return c;
}

/// Two mirrored fingers and a vertical peg whose tip sits at the view
/// center.  Deterministic.
inline GripperMask make_procedural_mask(const PegSpec& peg, FrameScale scale) {
    peg.validate();
    scale.validate();
    GrayImage img(kViewSize, kViewSize, 255);
    const int center = kViewSize / 2;
    const int width = std::max(1, static_cast<int>(std::lround(peg.diameter * scale.px_per_mm)));
    const int left = center - width / 2;

    for (int y = 0; y <= center; ++y)
        for (int x = left; x < left + width; ++x)
            img.at(x, y) = 0;

    // Left finger: a jaw plate plus a fingertip pad reaching toward the peg.
    auto paint_left_and_mirror = [&](int x0, int x1, int y0, int y1) {
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
                if (!img.contains(x, y))
                    continue;
                img.at(x, y) = 0;
                const int mirrored = 2 * center - x;
                if (img.contains(mirrored, y))
                    img.at(mirrored, y) = 0;
            }
    };
    const int gap = 6;
    paint_left_and_mirror(left - gap - 22, left - gap, 0, 58);
    paint_left_and_mirror(left - gap - 8, left - gap, 58, 66);
    return {std::move(img), {static_cast<double>(center), static_cast<double>(center)}};
}

inline void write_mask(const std::filesystem::path& pgm_path, const GripperMask& mask) {
    write_pgm(pgm_path, mask.image);
    std::ofstream side(pgm_path.string() + ".json");
    side << nlohmann::json{{"peg_center", to_json(mask.peg_center)}}.dump() << "\n";
    if (!side)
        throw std::runtime_error("cannot write mask sidecar for " + pgm_path.string());
}

inline GripperMask read_mask(const std::filesystem::path& pgm_path) {
    GripperMask m{read_pgm(pgm_path), {}};
    for (auto v : m.image.pixels)
        if (v != 0 && v != 255)
            throw std::runtime_error(pgm_path.string() + ": mask is not binary");
    std::ifstream side(pgm_path.string() + ".json");
    if (!side)
        throw std::runtime_error("missing mask sidecar for " + pgm_path.string());
    const auto j = nlohmann::json::parse(side);
    const auto& pc = j.at("peg_center");
    m.peg_center = {pc.at(0).get<double>(), pc.at(1).get<double>()};
    if (!m.image.contains(static_cast<int>(m.peg_center.x), static_cast<int>(m.peg_center.y)))
        throw std::runtime_error(pgm_path.string() + ": peg center outside mask");
    return m;
}

namespace detail {

/// Standard normal quantiles at the midpoints of 65536 equal-probability
/// bins (Acklam's rational approximation refined by one Halley step).
inline const std::array<double, 65536>& normal_quantiles() {
    static const std::array<double, 65536> table = [] {
        auto inv = [](double p) {
            static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                       1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
            static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                       6.680131188771972e+01,  -1.328068155288572e+01};
            static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                       -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
            static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                       3.754408661907416e+00};
            double x;
            if (p < 0.02425) {
                const double q = std::sqrt(-2 * std::log(p));
                x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                    ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
            } else if (p > 1 - 0.02425) {
                const double q = std::sqrt(-2 * std::log(1 - p));
                x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                    ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
            } else {
                const double q = p - 0.5, r = q * q;
                x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
                    (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
            }
            const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
            const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
            return x - u / (1 + x * u / 2);
        };
        std::array<double, 65536> t{};
        for (std::size_t i = 0; i < t.size(); ++i)
            t[i] = inv((static_cast<double>(i) + 0.5) / 65536.0);
        return t;
    }();
    return table;
}

}  // namespace detail

/// Builds the concatenated two-view image: background halves, hole disc
/// (mirrored horizontally in the second half), gripper overlay, noise.
inline GrayImage render_concat_view(const GrayImage& background, const GripperMask& mask,
                                    const RenderParams& params, const CameraConfig& camera = {}) {
    params.validate();
    if (background.width < kHalfWidth || background.height < kViewSize)
        throw std::invalid_argument("background region must be at least 80x160");
    const int pcx = static_cast<int>(std::lround(mask.peg_center.x));
    const int pcy = static_cast<int>(std::lround(mask.peg_center.y));

    GrayImage out(kViewSize, kViewSize);
    const double radius = params.hole_diameter_px / 2.0;
    const double r2 = radius * radius;
    const double hx = params.hole_center.x * camera.view_px_per_label_px;
    const double hy = params.hole_center.y * camera.view_px_per_label_px;
    const int half_center = kHalfWidth / 2;

    for (int half = 0; half < 2; ++half) {
        const int bg_x0 = half == 0 ? 0 : background.width - kHalfWidth;
        const double disc_u = half_center + (half == 0 ? hx : -hx);
        const double disc_v = pcy - hy;
        for (int v = 0; v < kViewSize; ++v)
            for (int u = 0; u < kHalfWidth; ++u) {
                std::uint8_t value = background.at(bg_x0 + u, v);
                const double du = u - disc_u;
                const double dv = v - disc_v;
                if (du * du + dv * dv <= r2)
                    value = static_cast<std::uint8_t>(params.hole_darkness);
                const int mask_u = pcx - half_center + (half == 0 ? u : kHalfWidth - u);
                if (mask.image.contains(mask_u, v) && mask.image.at(mask_u, v) == 0)
                    value = static_cast<std::uint8_t>(camera.gripper_intensity);
                out.at(half * kHalfWidth + u, v) = value;
            }
    }

    if (params.noise_sigma > 0.0) {
        // Each 64-bit draw feeds four pixels through the quantile table.
        const auto& q = detail::normal_quantiles();
        Rng rng = make_rng(params.seed);
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < out.pixels.size(); ++i) {
            if (i % 4 == 0)
                bits = rng();
            const double z = q[bits & 0xFFFF];
            bits >>= 16;
            auto& p = out.pixels[i];
            p = static_cast<std::uint8_t>(std::clamp(std::round(p + params.noise_sigma * z), 0.0, 255.0));
        }
    }
    return out;
}

/// Hole position relative to the peg, in label pixels, rounded to integers.
/// Throws std::out_of_range when the hole would leave the crop.
inline Vec2px ground_truth_label(const WorldState& world, FrameScale scale) {
    const Vec2px raw = mm_to_px(-world.peg_offset, scale);
    const Vec2px label{std::round(raw.x), std::round(raw.y)};
    if (!(std::abs(label.x) <= kLabelLimitPx) || !(std::abs(label.y) <= kLabelLimitPx))
        throw std::out_of_range("peg offset outside the labeled camera range");
    return label;
}

/// Renders the view the cameras would see for the current world state.
inline GrayImage render_world_view(const WorldState& world, FrameScale scale, const GrayImage& background,
                                   const GripperMask& mask, RenderParams params,
                                   const CameraConfig& camera = {}) {
    params.hole_center = mm_to_px(-world.peg_offset, scale);
    return render_concat_view(background, mask, params, camera);
}

}  // namespace pih

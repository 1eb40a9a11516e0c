#pragma once

// Procedural background stand-ins for the surface categories.  Real image
// collections can be used instead by listing PGM files as sources.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pih/camera.hpp"
#include "pih/image.hpp"
#include "pih/rng.hpp"

namespace pih {

enum class BackgroundCategory { Plain, Image, Textures, Metallic, Scenery, Food, LightPlain };

inline constexpr std::array kAllCategories = {
    BackgroundCategory::Plain,    BackgroundCategory::Image,   BackgroundCategory::Textures,
    BackgroundCategory::Metallic, BackgroundCategory::Scenery, BackgroundCategory::Food,
    BackgroundCategory::LightPlain};

inline std::string_view to_string(BackgroundCategory c) {
    switch (c) {
    case BackgroundCategory::Plain: return "Plain";
    case BackgroundCategory::Image: return "Image";
    case BackgroundCategory::Textures: return "Textures";
    case BackgroundCategory::Metallic: return "Metallic";
    case BackgroundCategory::Scenery: return "Scenery";
    case BackgroundCategory::Food: return "Food";
    case BackgroundCategory::LightPlain: return "LightPlain";
    }
    return "?";
}

inline std::optional<BackgroundCategory> category_from_string(std::string_view s) {
    for (auto c : kAllCategories)
        if (to_string(c) == s)
            return c;
    return std::nullopt;
}

/// Number of distinct procedural backgrounds available per category.
inline int procedural_pool_size(BackgroundCategory c) {
    switch (c) {
    case BackgroundCategory::Plain: return 90;
    case BackgroundCategory::LightPlain: return 35;
    default: return 1024;
    }
}

/// Intensity of plain background `index`: evenly spaced over [0,255]
/// (Plain) or [125,255] (LightPlain).
inline std::uint8_t plain_intensity(BackgroundCategory c, int index) {
    if (c == BackgroundCategory::LightPlain)
        return static_cast<std::uint8_t>(125 + std::lround(index * 130.0 / 34.0));
    return static_cast<std::uint8_t>(std::lround(index * 255.0 / 89.0));
}

namespace detail {

inline std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

inline void paint_blobs(GrayImage& img, Rng& rng, int count, double min_r, double max_r) {
    std::uniform_real_distribution<double> pos(0.0, kViewSize);
    std::uniform_real_distribution<double> rad(min_r, max_r);
    std::uniform_real_distribution<double> ang(0.0, M_PI);
    std::uniform_int_distribution<int> shade(0, 255);
    for (int b = 0; b < count; ++b) {
        const double cx = pos(rng), cy = pos(rng);
        const double ra = rad(rng), rb = rad(rng) * 0.6 + min_r * 0.4;
        const double phi = ang(rng);
        const double c = std::cos(phi), s = std::sin(phi);
        const int value = shade(rng);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                const double dx = x - cx, dy = y - cy;
                const double u = (c * dx + s * dy) / ra;
                const double v = (-s * dx + c * dy) / rb;
                if (u * u + v * v <= 1.0)
                    img.at(x, y) = static_cast<std::uint8_t>(value);
            }
    }
}

inline GrayImage textures(Rng& rng) {
    GrayImage img(kViewSize, kViewSize);
    std::uniform_int_distribution<int> shade(0, 255);
    std::uniform_real_distribution<double> period(6.0, 32.0);
    std::uniform_real_distribution<double> ang(0.0, M_PI);
    const int a = shade(rng), b = shade(rng);
    const double p = period(rng), phi = ang(rng);
    const bool checker = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    const double c = std::cos(phi), s = std::sin(phi);
    for (int y = 0; y < kViewSize; ++y)
        for (int x = 0; x < kViewSize; ++x) {
            const double u = (c * x + s * y) / p;
            const double v = (-s * x + c * y) / p;
            int cell = static_cast<int>(std::floor(u));
            if (checker)
                cell += static_cast<int>(std::floor(v));
            img.at(x, y) = static_cast<std::uint8_t>((cell & 1) ? a : b);
        }
    return img;
}

inline GrayImage metallic(Rng& rng) {
    GrayImage img(kViewSize, kViewSize);
    std::uniform_real_distribution<double> base(60.0, 200.0);
    std::uniform_real_distribution<double> slope(-0.6, 0.6);
    std::uniform_real_distribution<double> pos(0.0, kViewSize);
    std::uniform_real_distribution<double> width(2.0, 10.0);
    std::uniform_real_distribution<double> ang(0.0, M_PI);
    const double b0 = base(rng), sx = slope(rng), sy = slope(rng);
    struct Streak { double c, s, off, w, gain; };
    std::array<Streak, 3> streaks{};
    for (auto& st : streaks) {
        const double phi = ang(rng);
        st = {std::cos(phi), std::sin(phi), pos(rng), width(rng), base(rng)};
    }
    for (int y = 0; y < kViewSize; ++y)
        for (int x = 0; x < kViewSize; ++x) {
            double v = b0 + sx * (x - 80) + sy * (y - 80);
            for (const auto& st : streaks) {
                const double d = (st.c * x + st.s * y) - st.off;
                v += st.gain * std::exp(-(d * d) / (2.0 * st.w * st.w));
            }
            img.at(x, y) = clamp_u8(v);
        }
    return img;
}

inline GrayImage scenery(Rng& rng) {
    GrayImage img(kViewSize, kViewSize);
    std::uniform_real_distribution<double> shade(40.0, 230.0);
    std::uniform_real_distribution<double> horizon(30.0, 130.0);
    const double sky0 = shade(rng), sky1 = shade(rng), ground = shade(rng);
    const double h = horizon(rng);
    for (int y = 0; y < kViewSize; ++y)
        for (int x = 0; x < kViewSize; ++x) {
            const double ridge = h + 8.0 * std::sin(x / 13.0 + sky0);
            img.at(x, y) = y < ridge ? clamp_u8(sky0 + (sky1 - sky0) * y / ridge) : clamp_u8(ground);
        }
    paint_blobs(img, rng, 6, 5.0, 22.0);
    return img;
}

}  // namespace detail

/// Deterministic 160x160 stand-in background for (category, index).
inline GrayImage procedural_background(BackgroundCategory c, int index) {
    if (index < 0 || index >= procedural_pool_size(c))
        throw std::out_of_range("procedural background index out of range");
    if (c == BackgroundCategory::Plain || c == BackgroundCategory::LightPlain)
        return GrayImage(kViewSize, kViewSize, plain_intensity(c, index));

    Rng rng = make_rng(derive_seed(0x5EED0BAC6ULL, {static_cast<std::uint64_t>(c),
                                                    static_cast<std::uint64_t>(index)}));
    switch (c) {
    case BackgroundCategory::Textures: return detail::textures(rng);
    case BackgroundCategory::Metallic: return detail::metallic(rng);
    case BackgroundCategory::Scenery: return detail::scenery(rng);
    case BackgroundCategory::Food: {
        GrayImage img(kViewSize, kViewSize, detail::clamp_u8(std::uniform_real_distribution<double>(0, 255)(rng)));
        detail::paint_blobs(img, rng, 40, 4.0, 26.0);
        return img;
    }
    case BackgroundCategory::Image: {
        // A mix of every other generator, overlaid with a few blobs.
        const int pick = std::uniform_int_distribution<int>(0, 3)(rng);
        GrayImage img = pick == 0   ? detail::textures(rng)
                        : pick == 1 ? detail::metallic(rng)
                        : pick == 2 ? detail::scenery(rng)
                                    : GrayImage(kViewSize, kViewSize,
                                                detail::clamp_u8(std::uniform_real_distribution<double>(0, 255)(rng)));
        detail::paint_blobs(img, rng, 12, 4.0, 30.0);
        return img;
    }
    default: break;
    }
    throw std::logic_error("unhandled background category");
}

/// Resolves a background source reference.  "procedural:<Category>:<index>"
/// names a built-in stand-in; anything else is a path to a binary PGM.
inline GrayImage load_background(const std::string& source) {
    constexpr std::string_view prefix = "procedural:";
    if (source.rfind(prefix, 0) == 0) {
        const std::string rest = source.substr(prefix.size());
        const auto colon = rest.find(':');
        if (colon == std::string::npos)
            throw ConfigError("bad procedural source: " + source);
        const auto cat = category_from_string(rest.substr(0, colon));
        if (!cat)
            throw ConfigError("unknown background category in: " + source);
        int index = 0;
        try {
            index = std::stoi(rest.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad procedural index in: " + source);
        }
        return procedural_background(*cat, index);
    }
    GrayImage img = read_pgm(source);
    if (img.width < kHalfWidth || img.height < kViewSize)
        throw ConfigError("background smaller than 80x160: " + source);
    return img;
}

inline std::string procedural_source(BackgroundCategory c, int index) {
    return "procedural:" + std::string(to_string(c)) + ":" + std::to_string(index);
}

}  // namespace pih

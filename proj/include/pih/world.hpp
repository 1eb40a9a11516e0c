#pragma once

// Ground-truth geometry, frames and quadrant semantics shared by every
// other part of the simulator.
//
// Frames: offsets are expressed in the hole frame (origin at the hole
// center, axes aligned with the end effector).  Image-space offsets use the
// network convention: (x, y) is the hole position relative to the peg
// center in pixels, +y pointing up in the picture of camera 1.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace pih {

/// Raised for any invalid user-supplied configuration value.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec2mm {
    double x = 0.0;
    double y = 0.0;

    double norm() const { return std::hypot(x, y); }

    friend Vec2mm operator+(Vec2mm a, Vec2mm b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2mm operator-(Vec2mm a, Vec2mm b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2mm operator-(Vec2mm a) { return {-a.x, -a.y}; }
    friend Vec2mm operator*(double s, Vec2mm a) { return {s * a.x, s * a.y}; }
    friend bool operator==(const Vec2mm&, const Vec2mm&) = default;
};

struct Vec2px {
    double x = 0.0;
    double y = 0.0;

    friend Vec2px operator+(Vec2px a, Vec2px b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2px operator-(Vec2px a, Vec2px b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2px operator-(Vec2px a) { return {-a.x, -a.y}; }
    friend bool operator==(const Vec2px&, const Vec2px&) = default;
};

/// Pixels per millimeter at the working distance of the in-hand cameras.
/// 66 px of image travel correspond to 40 mm of peg travel.
struct FrameScale {
    double px_per_mm = 1.65;

    void validate() const {
        if (!(px_per_mm > 0.0) || !std::isfinite(px_per_mm))
            throw ConfigError("px_per_mm must be a positive finite number");
    }
};

inline Vec2mm px_to_mm(Vec2px v, FrameScale s) { return {v.x / s.px_per_mm, v.y / s.px_per_mm}; }
inline Vec2px mm_to_px(Vec2mm v, FrameScale s) { return {v.x * s.px_per_mm, v.y * s.px_per_mm}; }

struct PegSpec {
    double length = 75.0;
    double diameter = 10.0;

    void validate() const {
        if (!(length > 0.0) || !(diameter > 0.0))
            throw ConfigError("peg length and diameter must be positive");
    }
};

struct HoleSpec {
    double diameter = 10.4;
    double radial_clearance = 0.2;  // half of the 0.4 mm diametral lenience
    Vec2mm center{};

    void validate(const PegSpec& peg) const {
        if (!(diameter > peg.diameter))
            throw ConfigError("hole diameter must exceed peg diameter");
        if (!(radial_clearance > 0.0))
            throw ConfigError("radial clearance must be positive");
    }
};

/// Mutable ground truth for one episode.  Confined to a single executor.
struct WorldState {
    Vec2mm peg_offset{};        // peg center minus hole center
    double peg_z = 0.0;         // tip height above the surface, negative when inserted
    double contact_force_z = 0.0;
    double sim_time = 0.0;
    std::uint64_t rng_seed = 0;

    void advance(double dt) {
        if (!(dt >= 0.0))
            throw std::logic_error("simulated time cannot run backwards");
        sim_time += dt;
    }
};

enum class Quadrant { Topleft, Bottomleft, Bottomright, Topright };

inline std::string_view to_string(Quadrant q) {
    switch (q) {
    case Quadrant::Topleft: return "Topleft";
    case Quadrant::Bottomleft: return "Bottomleft";
    case Quadrant::Bottomright: return "Bottomright";
    case Quadrant::Topright: return "Topright";
    }
    return "?";
}

/// Sign-pair convention.  Empty when the offset lies on an axis.
inline std::optional<Quadrant> quadrant_of(Vec2px v) {
    if (v.x == 0.0 || v.y == 0.0 || std::isnan(v.x) || std::isnan(v.y))
        return std::nullopt;
    if (v.x > 0.0)
        return v.y > 0.0 ? Quadrant::Topright : Quadrant::Bottomright;
    return v.y > 0.0 ? Quadrant::Topleft : Quadrant::Bottomleft;
}

inline Quadrant opposite(Quadrant q) {
    switch (q) {
    case Quadrant::Topleft: return Quadrant::Bottomright;
    case Quadrant::Bottomleft: return Quadrant::Topright;
    case Quadrant::Bottomright: return Quadrant::Topleft;
    case Quadrant::Topright: return Quadrant::Bottomleft;
    }
    return q;
}

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Static description of the cell: scale, peg, hole, workspace bound.
struct WorldConfig {
    FrameScale scale{};
    PegSpec peg{};
    HoleSpec hole{};
    double workspace_half_width = 100.0;

    void validate() const {
        scale.validate();
        peg.validate();
        hole.validate(peg);
        if (!(workspace_half_width > 0.0))
            throw ConfigError("workspace_half_width must be positive");
    }

    bool inside_workspace(Vec2mm v) const {
        return std::isfinite(v.x) && std::isfinite(v.y) &&
               std::abs(v.x) <= workspace_half_width && std::abs(v.y) <= workspace_half_width;
    }
};

// ---------------------------------------------------------------------------
// JSON helpers shared by every configuration reader.

template <typename T>
T json_get(const nlohmann::json& j, std::string_view key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad value for '" + std::string(key) + "': " + e.what());
    }
}

inline Vec2mm vec2mm_from_json(const nlohmann::json& j) {
    if (j.is_array() && j.size() == 2)
        return {j[0].get<double>(), j[1].get<double>()};
    if (j.is_object())
        return {json_get(j, "x", 0.0), json_get(j, "y", 0.0)};
    throw ConfigError("expected [x, y] or {\"x\":..,\"y\":..}");
}

inline nlohmann::json to_json(Vec2mm v) { return nlohmann::json::array({v.x, v.y}); }
inline nlohmann::json to_json(Vec2px v) { return nlohmann::json::array({v.x, v.y}); }

inline WorldConfig world_config_from_json(const nlohmann::json& j) {
    WorldConfig c;
    c.scale.px_per_mm = json_get(j, "px_per_mm", c.scale.px_per_mm);
    c.peg.length = json_get(j, "peg_length", c.peg.length);
    c.peg.diameter = json_get(j, "peg_diameter", c.peg.diameter);
    c.hole.diameter = json_get(j, "hole_diameter", c.hole.diameter);
    c.hole.radial_clearance = json_get(j, "radial_clearance", c.hole.radial_clearance);
    if (auto it = j.find("hole_center"); it != j.end())
        c.hole.center = vec2mm_from_json(*it);
    c.workspace_half_width = json_get(j, "workspace_half_width", c.workspace_half_width);
    c.validate();
    return c;
}

}  // namespace pih

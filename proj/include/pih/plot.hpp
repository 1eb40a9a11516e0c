#pragma once

// Minimal SVG charts built from the suite report files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace pih {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Frame {
    double x0, x1, y0, y1;
    double w = 640, h = 420, margin = 56;
    double sx(double x) const { return margin + (x - x0) / (x1 - x0) * (w - 2 * margin); }
    double sy(double y) const { return h - margin - (y - y0) / (y1 - y0) * (h - 2 * margin); }
};

inline Frame fit(const std::vector<Series>& series, bool equal_aspect) {
    Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            f.x0 = std::min(f.x0, x);
            f.x1 = std::max(f.x1, x);
            f.y0 = std::min(f.y0, y);
            f.y1 = std::max(f.y1, y);
        }
    if (!std::isfinite(f.x0)) {
        f.x0 = f.y0 = 0;
        f.x1 = f.y1 = 1;
    }
    if (equal_aspect) {
        const double half = 0.5 * std::max(f.x1 - f.x0, f.y1 - f.y0);
        const double cx = 0.5 * (f.x0 + f.x1), cy = 0.5 * (f.y0 + f.y1);
        f.x0 = cx - half, f.x1 = cx + half, f.y0 = cy - half, f.y1 = cy + half;
        f.w = f.h;
    }
    if (f.x1 - f.x0 < 1e-12)
        f.x0 -= 1, f.x1 += 1;
    if (f.y1 - f.y0 < 1e-12)
        f.y0 -= 1, f.y1 += 1;
    const double px = 0.05 * (f.x1 - f.x0), py = 0.05 * (f.y1 - f.y0);
    f.x0 -= px, f.x1 += px, f.y0 -= py, f.y1 += py;
    return f;
}

}  // namespace detail

/// Polyline chart with axes, five ticks per axis and an inline legend.
inline std::string svg_line_chart(const std::vector<Series>& series, const std::string& title,
                                  const std::string& xlabel, const std::string& ylabel, bool equal_aspect = false,
                                  bool markers = true) {
    using detail::num;
    const auto f = detail::fit(series, equal_aspect);
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.w << "\" height=\"" << f.h
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << f.w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << detail::escape(title)
       << "</text>\n";
    const double left = f.margin, right = f.w - f.margin, top = f.margin, bottom = f.h - f.margin;
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left << "\" height=\"" << bottom - top
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0, yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        os << "<text x=\"" << num(f.sx(xv)) << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\">" << num(xv)
           << "</text>\n";
        os << "<text x=\"" << left - 4 << "\" y=\"" << num(f.sy(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
           << "</text>\n";
    }
    if (f.y0 < 0 && f.y1 > 0)
        os << "<line x1=\"" << left << "\" x2=\"" << right << "\" y1=\"" << num(f.sy(0)) << "\" y2=\""
           << num(f.sy(0)) << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
    os << "<text x=\"" << f.w / 2 << "\" y=\"" << f.h - 12 << "\" text-anchor=\"middle\">" << detail::escape(xlabel)
       << "</text>\n";
    os << "<text transform=\"translate(14," << f.h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << detail::escape(ylabel) << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = detail::palette(i);
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (auto [x, y] : s.points)
            os << num(f.sx(x)) << "," << num(f.sy(y)) << " ";
        os << "\"/>\n";
        if (markers)
            for (auto [x, y] : s.points)
                os << "<circle cx=\"" << num(f.sx(x)) << "\" cy=\"" << num(f.sy(y)) << "\" r=\"2.5\" fill=\"" << color
                   << "\"/>\n";
        if (!s.label.empty() && series.size() <= 12)
            os << "<text x=\"" << right - 4 << "\" y=\"" << top + 14 + 13 * static_cast<double>(i)
               << "\" text-anchor=\"end\" fill=\"" << color << "\">" << detail::escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in)
        throw std::runtime_error("cannot open " + p.string());
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            out.push_back(nlohmann::json::parse(line));
    return out;
}

/// Writes servo.svg, spiral.svg and times.svg from a run-experiment output
/// directory.  At most `max_episodes` traces are drawn per chart.
inline std::vector<std::filesystem::path> plot_reports(const std::filesystem::path& report_dir,
                                                       const std::filesystem::path& out_dir,
                                                       std::size_t max_episodes = 10) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::string& name, const std::string& svg) {
        const auto p = out_dir / name;
        std::ofstream(p) << svg;
        written.push_back(p);
    };

    if (std::filesystem::exists(report_dir / "servo_traces.jsonl")) {
        std::map<std::uint64_t, Series> by_episode;
        for (const auto& j : read_jsonl(report_dir / "servo_traces.jsonl")) {
            const auto ep = j.at("episode").get<std::uint64_t>();
            if (!by_episode.count(ep) && by_episode.size() >= max_episodes)
                continue;
            auto& s = by_episode[ep];
            s.label = "episode " + std::to_string(ep);
            const double x = j.at("offset_x").get<double>(), y = j.at("offset_y").get<double>();
            const double dist = std::hypot(x, y);
            if (s.points.empty())
                s.points.push_back({0.0, std::hypot(x - j.at("step_x").get<double>(), y - j.at("step_y").get<double>())});
            s.points.push_back({j.at("t").get<double>() + 1.0, dist});
        }
        std::vector<Series> series;
        for (auto& [_, s] : by_episode)
            series.push_back(std::move(s));
        emit("servo.svg", svg_line_chart(series, "Offset during visual servoing", "iteration", "|offset| (mm)"));
    }

    if (std::filesystem::exists(report_dir / "spiral_traces.jsonl")) {
        std::map<std::uint64_t, Series> by_episode;
        for (const auto& j : read_jsonl(report_dir / "spiral_traces.jsonl")) {
            const auto ep = j.at("episode").get<std::uint64_t>();
            if (!by_episode.count(ep) && by_episode.size() >= max_episodes)
                continue;
            auto& s = by_episode[ep];
            s.label = "episode " + std::to_string(ep);
            s.points.push_back({j.at("x").get<double>(), j.at("y").get<double>()});
        }
        std::vector<Series> series;
        for (auto& [_, s] : by_episode)
            series.push_back(std::move(s));
        emit("spiral.svg", svg_line_chart(series, "Spiral search path (peg minus hole)", "x (mm)", "y (mm)", true, false));
    }

    if (std::filesystem::exists(report_dir / "summary.json")) {
        std::ifstream in(report_dir / "summary.json");
        const auto summary = nlohmann::json::parse(in);
        std::map<std::string, Series> groups;
        for (const auto& c : summary.at("cells")) {
            const std::string key =
                c.at("predictor").get<std::string>() + (c.at("servo").get<bool>() ? " / servo" : " / no servo");
            auto& s = groups[key];
            s.label = key;
            if (c.at("successes").get<int>() > 0)
                s.points.push_back({c.at("offset_mm").get<double>(), c.at("mean_time").get<double>()});
        }
        std::vector<Series> series;
        for (auto& [_, s] : groups) {
            std::sort(s.points.begin(), s.points.end());
            series.push_back(std::move(s));
        }
        emit("times.svg", svg_line_chart(series, "Mean time of successful episodes", "initial offset (mm)", "time (s)"));
    }
    if (written.empty())
        throw std::runtime_error("no report files found in " + report_dir.string());
    return written;
}

}  // namespace pih

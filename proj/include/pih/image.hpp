#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pih {

/// 8-bit grayscale raster, row-major, 0 = black.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
        if (w < 0 || h < 0)
            throw std::invalid_argument("negative image size");
    }

    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Box-filter downsampling by an integer factor that divides both sides.
inline GrayImage downsample(const GrayImage& src, int factor) {
    if (factor == 1)
        return src;
    if (factor < 1 || src.width % factor || src.height % factor)
        throw std::invalid_argument("downsample factor must divide the image size");
    GrayImage out(src.width / factor, src.height / factor);
    const int area = factor * factor;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            int sum = 0;
            for (int dy = 0; dy < factor; ++dy)
                for (int dx = 0; dx < factor; ++dx)
                    sum += src.at(x * factor + dx, y * factor + dy);
            out.at(x, y) = static_cast<std::uint8_t>((sum + area / 2) / area);
        }
    return out;
}

inline std::string encode_pgm(const GrayImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    return out;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot open for writing: " + path.string());
    const std::string bytes = encode_pgm(img);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f)
        throw std::runtime_error("write failed: " + path.string());
}

namespace detail {

inline void skip_pgm_space(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            in.get();
        } else {
            return;
        }
    }
}

}  // namespace detail

/// Reads binary PGM (P5) with maxval 255.
inline GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open: " + path.string());
    std::string magic;
    f >> magic;
    if (magic != "P5")
        throw std::runtime_error(path.string() + ": not a binary PGM");
    int w = 0, h = 0, maxval = 0;
    detail::skip_pgm_space(f);
    f >> w;
    detail::skip_pgm_space(f);
    f >> h;
    detail::skip_pgm_space(f);
    f >> maxval;
    if (!f || w <= 0 || h <= 0 || maxval != 255)
        throw std::runtime_error(path.string() + ": unsupported PGM header");
    f.get();  // single whitespace before the raster
    GrayImage img(w, h);
    f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw std::runtime_error(path.string() + ": truncated raster");
    return img;
}

}  // namespace pih

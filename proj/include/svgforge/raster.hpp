#pragma once

#include "svgforge/geometry.hpp"
#include "svgforge/svg.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace svgforge {

/// Binary coverage mask, packed 64 pixels per word with each row padded to a whole
/// number of words. Bit x of a row lives in word x/64 at bit position x%64.
class MaskBitmap {
public:
    MaskBitmap() = default;
    MaskBitmap(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    int words_per_row() const { return words_per_row_; }

    bool get(int x, int y) const
    {
        return (words_[row_offset(y) + x / 64] >> (x % 64)) & 1u;
    }
    void set(int x, int y, bool on = true);
    // Sets pixels [x0, x1) of row y.
    void fill_span(int y, int x0, int x1);

    std::span<const std::uint64_t> words() const { return words_; }
    std::span<const std::uint64_t> row(int y) const
    {
        return std::span<const std::uint64_t>(words_).subspan(row_offset(y), words_per_row_);
    }

    friend bool operator==(const MaskBitmap&, const MaskBitmap&) = default;

private:
    std::size_t row_offset(int y) const { return static_cast<std::size_t>(y) * words_per_row_; }

    int width_ = 0;
    int height_ = 0;
    int words_per_row_ = 0;
    std::vector<std::uint64_t> words_;
};

class ColorBitmap {
public:
    ColorBitmap() = default;
    ColorBitmap(int width, int height, RgbColor background = {255, 255, 255});

    int width() const { return width_; }
    int height() const { return height_; }
    const RgbColor& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    RgbColor& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const RgbColor> pixels() const { return pixels_; }

    friend bool operator==(const ColorBitmap&, const ColorBitmap&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<RgbColor> pixels_;
};

using Polygon = std::vector<Point>;

inline constexpr double kDefaultFlatteningTolerance = 0.1;

/// Cubics are split at t = 1/2 until both control points lie within `tolerance` of the chord.
/// Every subpath becomes one closed loop (the closing edge is implicit).
std::vector<Polygon> flatten_path(std::span<const PathCommand> commands, double tolerance);

/// Pixel (i, j) is set iff its center, mapped from `viewport` into pixel space, is inside.
MaskBitmap rasterize_mask(std::span<const Polygon> loops, int width, int height, FillRule rule,
                          const Bbox& viewport);

/// Flattens with a tolerance equivalent to `kDefaultFlatteningTolerance` at 100 units per 100 pixels.
MaskBitmap rasterize_path(std::span<const PathCommand> commands, int width, int height, FillRule rule,
                          const Bbox& viewport);

ColorBitmap rasterize_document(const SvgDocument& doc, int width, int height);

std::size_t mask_area(const MaskBitmap& m);
std::size_t intersection_count(const MaskBitmap& a, const MaskBitmap& b);
std::size_t union_count(const MaskBitmap& a, const MaskBitmap& b);

double polygon_area(const Polygon& loop); // signed shoelace area

void write_pgm(const MaskBitmap& m, const std::filesystem::path& path);
void write_ppm(const ColorBitmap& c, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm(const MaskBitmap& m);
std::vector<std::uint8_t> encode_ppm(const ColorBitmap& c);

} // namespace svgforge

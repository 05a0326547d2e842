#include "svgforge/raster.hpp"
#include "svgforge/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <string>

namespace svgforge {

MaskBitmap::MaskBitmap(int width, int height)
    : width_(width), height_(height), words_per_row_((width + 63) / 64),
      words_(static_cast<std::size_t>(words_per_row_) * height, 0)
{
    if (width < 1 || height < 1)
        throw Error(ErrorCode::InvalidArgument, fmt::format("mask size {}x{}", width, height));
}

void MaskBitmap::set(int x, int y, bool on)
{
    std::uint64_t& w = words_[row_offset(y) + x / 64];
    const std::uint64_t bit = std::uint64_t{1} << (x % 64);
    w = on ? (w | bit) : (w & ~bit);
}

void MaskBitmap::fill_span(int y, int x0, int x1)
{
    if (x0 >= x1)
        return;
    std::uint64_t* row = words_.data() + row_offset(y);
    int first = x0 / 64;
    const int last = (x1 - 1) / 64;
    const auto low_mask = [](int bits) -> std::uint64_t {
        return bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
    };
    if (first == last) {
        row[first] |= low_mask(x1 - first * 64) & ~low_mask(x0 - first * 64);
        return;
    }
    row[first] |= ~low_mask(x0 - first * 64);
    for (++first; first < last; ++first)
        row[first] = ~std::uint64_t{0};
    row[last] |= low_mask(x1 - last * 64);
}

ColorBitmap::ColorBitmap(int width, int height, RgbColor background)
    : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height, background)
{
    if (width < 1 || height < 1)
        throw Error(ErrorCode::InvalidArgument, fmt::format("bitmap size {}x{}", width, height));
}

namespace {

double distance_to_chord(Point p, Point a, Point b)
{
    const Point ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    const Point ap = p - a;
    if (len2 == 0.0)
        return std::sqrt(ap.x * ap.x + ap.y * ap.y);
    return std::abs(ab.x * ap.y - ab.y * ap.x) / std::sqrt(len2);
}

void flatten_cubic(const CubicBezier& c, double tol, int depth, Polygon& out)
{
    if (depth >= 18 ||
        std::max(distance_to_chord(c.c1, c.p0, c.p1), distance_to_chord(c.c2, c.p0, c.p1)) <= tol) {
        out.push_back(c.p1);
        return;
    }
    // de Casteljau split at 1/2
    const Point p01 = 0.5 * (c.p0 + c.c1);
    const Point p12 = 0.5 * (c.c1 + c.c2);
    const Point p23 = 0.5 * (c.c2 + c.p1);
    const Point p012 = 0.5 * (p01 + p12);
    const Point p123 = 0.5 * (p12 + p23);
    const Point mid = 0.5 * (p012 + p123);
    flatten_cubic({c.p0, p01, p012, mid}, tol, depth + 1, out);
    flatten_cubic({mid, p123, p23, c.p1}, tol, depth + 1, out);
}

struct Edge {
    double x0, y0, x1, y1;
    int dir;
    int first_row;
    int last_row; // inclusive
};

} // namespace

std::vector<Polygon> flatten_path(std::span<const PathCommand> commands, double tolerance)
{
    if (!(tolerance > 0.0))
        throw Error(ErrorCode::InvalidArgument, "flattening tolerance must be positive");
    std::vector<Polygon> loops;
    Polygon current;
    Point cur{};
    auto flush = [&] {
        if (current.size() >= 2)
            loops.push_back(std::move(current));
        current.clear();
    };
    for (const auto& cmd : commands) {
        switch (cmd.kind) {
        case CommandKind::MoveTo:
            flush();
            cur = cmd.pts[0];
            current.push_back(cur);
            break;
        case CommandKind::LineTo:
            cur = cmd.pts[0];
            current.push_back(cur);
            break;
        case CommandKind::CubicTo:
            flatten_cubic({cur, cmd.pts[0], cmd.pts[1], cmd.pts[2]}, tolerance, 0, current);
            cur = cmd.pts[2];
            break;
        case CommandKind::ClosePath:
            if (!current.empty()) {
                const Point start = current.front();
                flush();
                cur = start;
            }
            break;
        }
    }
    flush();
    return loops;
}

MaskBitmap rasterize_mask(std::span<const Polygon> loops, int width, int height, FillRule rule,
                          const Bbox& viewport)
{
    MaskBitmap mask(width, height);
    if (!(viewport.width() > 0.0) || !(viewport.height() > 0.0))
        throw Error(ErrorCode::InvalidArgument, "viewport must have positive size");
    const double sx = width / viewport.width();
    const double sy = height / viewport.height();

    std::vector<Edge> edges;
    for (const auto& loop : loops) {
        const std::size_t n = loop.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point a = loop[i];
            const Point b = loop[(i + 1) % n];
            const double ax = (a.x - viewport.min_x) * sx;
            const double ay = (a.y - viewport.min_y) * sy;
            const double bx = (b.x - viewport.min_x) * sx;
            const double by = (b.y - viewport.min_y) * sy;
            if (ay == by)
                continue;
            Edge e{ax, ay, bx, by, by > ay ? 1 : -1, 0, 0};
            const double ymin = std::min(ay, by);
            const double ymax = std::max(ay, by);
            // Rows whose center y_c = j + 0.5 satisfies ymin <= y_c < ymax.
            e.first_row = std::max(0, static_cast<int>(std::ceil(ymin - 0.5)));
            e.last_row = std::min(height - 1, static_cast<int>(std::ceil(ymax - 0.5)) - 1);
            if (e.first_row <= e.last_row)
                edges.push_back(e);
        }
    }
    if (edges.empty())
        return mask;

    std::vector<std::vector<int>> starts(height);
    for (int i = 0; i < static_cast<int>(edges.size()); ++i)
        starts[edges[i].first_row].push_back(i);

    std::vector<int> active;
    std::vector<std::pair<double, int>> crossings;
    for (int row = 0; row < height; ++row) {
        active.erase(std::remove_if(active.begin(), active.end(), [&](int i) { return edges[i].last_row < row; }),
                     active.end());
        active.insert(active.end(), starts[row].begin(), starts[row].end());
        if (active.empty())
            continue;
        const double yc = row + 0.5;
        crossings.clear();
        for (int i : active) {
            const Edge& e = edges[i];
            const double t = (yc - e.y0) / (e.y1 - e.y0);
            crossings.emplace_back(e.x0 + t * (e.x1 - e.x0), e.dir);
        }
        std::sort(crossings.begin(), crossings.end());
        int winding = 0;
        for (std::size_t k = 0; k + 1 < crossings.size(); ++k) {
            winding += crossings[k].second;
            const bool inside = rule == FillRule::NonZero ? winding != 0 : (winding & 1) != 0;
            if (!inside)
                continue;
            // Pixel i is covered when its center i + 0.5 lies in [x_k, x_{k+1}).
            const int x0 = std::max(0, static_cast<int>(std::ceil(crossings[k].first - 0.5)));
            const int x1 = std::min(width, static_cast<int>(std::ceil(crossings[k + 1].first - 0.5)));
            mask.fill_span(row, x0, x1);
        }
    }
    return mask;
}

MaskBitmap rasterize_path(std::span<const PathCommand> commands, int width, int height, FillRule rule,
                          const Bbox& viewport)
{
    const double units_per_pixel = std::min(viewport.width() / width, viewport.height() / height);
    const double tol = kDefaultFlatteningTolerance * units_per_pixel;
    const auto loops = flatten_path(commands, tol > 0.0 ? tol : kDefaultFlatteningTolerance);
    return rasterize_mask(loops, width, height, rule, viewport);
}

ColorBitmap rasterize_document(const SvgDocument& doc, int width, int height)
{
    ColorBitmap bmp(width, height);
    const auto& vb = doc.viewbox;
    const Bbox viewport{vb.min_x, vb.min_y, vb.min_x + vb.width, vb.min_y + vb.height};
    for (const auto& path : doc.paths) {
        if (!path.fill || path.commands.empty())
            continue;
        const MaskBitmap m = rasterize_path(path.commands, width, height, path.fill_rule, viewport);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                if (m.get(x, y))
                    bmp.at(x, y) = *path.fill;
            }
        }
    }
    return bmp;
}

namespace {

void check_same_size(const MaskBitmap& a, const MaskBitmap& b)
{
    if (a.width() != b.width() || a.height() != b.height()) {
        throw Error(ErrorCode::DimensionMismatch,
                    fmt::format("{}x{} vs {}x{}", a.width(), a.height(), b.width(), b.height()));
    }
}

} // namespace

std::size_t mask_area(const MaskBitmap& m)
{
    std::size_t n = 0;
    for (std::uint64_t w : m.words())
        n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

std::size_t intersection_count(const MaskBitmap& a, const MaskBitmap& b)
{
    check_same_size(a, b);
    const auto wa = a.words();
    const auto wb = b.words();
    std::size_t n = 0;
    for (std::size_t i = 0; i < wa.size(); ++i)
        n += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
    return n;
}

std::size_t union_count(const MaskBitmap& a, const MaskBitmap& b)
{
    check_same_size(a, b);
    const auto wa = a.words();
    const auto wb = b.words();
    std::size_t n = 0;
    for (std::size_t i = 0; i < wa.size(); ++i)
        n += static_cast<std::size_t>(std::popcount(wa[i] | wb[i]));
    return n;
}

double polygon_area(const Polygon& loop)
{
    double twice = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Point a = loop[i];
        const Point b = loop[(i + 1) % loop.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

std::vector<std::uint8_t> encode_pgm(const MaskBitmap& m)
{
    const std::string header = fmt::format("P5\n{} {}\n255\n", m.width(), m.height());
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + static_cast<std::size_t>(m.width()) * m.height());
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x)
            out.push_back(m.get(x, y) ? 0xFF : 0x00);
    }
    return out;
}

std::vector<std::uint8_t> encode_ppm(const ColorBitmap& c)
{
    const std::string header = fmt::format("P6\n{} {}\n255\n", c.width(), c.height());
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + c.pixels().size() * 3);
    for (const auto& p : c.pixels()) {
        out.push_back(p.r);
        out.push_back(p.g);
        out.push_back(p.b);
    }
    return out;
}

namespace {

void write_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::IoError, fmt::format("cannot open '{}' for writing", path.string()));
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f)
        throw Error(ErrorCode::IoError, fmt::format("write to '{}' failed", path.string()));
}

} // namespace

void write_pgm(const MaskBitmap& m, const std::filesystem::path& path) { write_bytes(encode_pgm(m), path); }

void write_ppm(const ColorBitmap& c, const std::filesystem::path& path) { write_bytes(encode_ppm(c), path); }

} // namespace svgforge

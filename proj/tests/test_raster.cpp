#include "support.hpp"

#include "svgforge/error.hpp"
#include "svgforge/raster.hpp"
#include "svgforge/svg.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace svgforge;
using namespace svgforge::testing;

namespace {
const Bbox kView{0, 0, 100, 100};
}

TEST_CASE("flattening")
{
    const CommandList tri = polygon_path({{0, 0}, {10, 0}, {5, 8}});
    const auto loops = flatten_path(tri, 0.1);
    REQUIRE(loops.size() == 1);
    CHECK(loops[0] == Polygon{{0, 0}, {10, 0}, {5, 8}});

    const auto circle = flatten_path(circle_path(50, 50, 40), 0.1);
    REQUIRE(circle.size() == 1);
    const double area = std::abs(polygon_area(circle[0]));
    CHECK(std::abs(area - std::numbers::pi * 1600) / (std::numbers::pi * 1600) < 0.005);

    std::size_t prev = 0;
    for (double tol : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
        const std::size_t n = flatten_path(circle_path(50, 50, 40), tol)[0].size();
        CHECK(n >= prev);
        prev = n;
    }
}

TEST_CASE("scanline coverage")
{
    const MaskBitmap full = rasterize_path(rect_path(0, 0, 100, 100), 100, 100, FillRule::NonZero, kView);
    CHECK(mask_area(full) == 10000);
    const MaskBitmap half = rasterize_path(rect_path(0, 0, 50, 100), 100, 100, FillRule::NonZero, kView);
    CHECK(mask_area(half) == 5000);
    CHECK(half.get(49, 0));
    CHECK_FALSE(half.get(50, 0));
}

TEST_CASE("winding rules")
{
    // outer counter-clockwise in y-down pixel terms vs inner reversed
    const Polygon outer{{10, 10}, {90, 10}, {90, 90}, {10, 90}};
    Polygon inner_same{{30, 30}, {70, 30}, {70, 70}, {30, 70}};
    Polygon inner_rev(inner_same.rbegin(), inner_same.rend());
    const std::vector<Polygon> opposite{outer, inner_rev};
    const std::vector<Polygon> same{outer, inner_same};

    const MaskBitmap a = rasterize_mask(opposite, 100, 100, FillRule::NonZero, kView);
    CHECK_FALSE(a.get(50, 50));
    CHECK(a.get(20, 20));
    const MaskBitmap b = rasterize_mask(same, 100, 100, FillRule::NonZero, kView);
    CHECK(b.get(50, 50));
    const MaskBitmap c = rasterize_mask(same, 100, 100, FillRule::EvenOdd, kView);
    CHECK_FALSE(c.get(50, 50));
    CHECK(c.get(20, 20));

    // winding-number oracle at sampled pixel centers
    auto winding = [](const std::vector<Polygon>& loops, Point p) {
        int w = 0;
        for (const auto& loop : loops) {
            for (std::size_t i = 0; i < loop.size(); ++i) {
                const Point a0 = loop[i], a1 = loop[(i + 1) % loop.size()];
                if (a0.y <= p.y && a1.y > p.y && (a1.x - a0.x) * (p.y - a0.y) - (p.x - a0.x) * (a1.y - a0.y) > 0)
                    ++w;
                else if (a0.y > p.y && a1.y <= p.y && (a1.x - a0.x) * (p.y - a0.y) - (p.x - a0.x) * (a1.y - a0.y) < 0)
                    --w;
            }
        }
        return w;
    };
    for (int y = 0; y < 100; y += 3) {
        for (int x = 0; x < 100; x += 3) {
            const Point p{x + 0.5, y + 0.5};
            REQUIRE(a.get(x, y) == (winding(opposite, p) != 0));
            REQUIRE(b.get(x, y) == (winding(same, p) != 0));
            REQUIRE(c.get(x, y) == (winding(same, p) % 2 != 0));
        }
    }
}

TEST_CASE("document rendering")
{
    const ColorBitmap blank = rasterize_document(SvgDocument{}, 10, 10);
    for (const auto& px : blank.pixels())
        CHECK(px == RgbColor{255, 255, 255});

    SvgDocument doc;
    doc.paths.push_back({rect_path(0, 0, 60, 60), RgbColor{255, 0, 0}});
    doc.paths.push_back({rect_path(40, 40, 100, 100), RgbColor{0, 0, 255}});
    const ColorBitmap bmp = rasterize_document(doc, 100, 100);
    CHECK(bmp.at(10, 10) == RgbColor{255, 0, 0});
    CHECK(bmp.at(50, 50) == RgbColor{0, 0, 255});
    CHECK(bmp.at(90, 10) == RgbColor{255, 255, 255});

    const SvgDocument messy = parse_svg(
        R"~(<svg viewBox="0 0 100 100"><circle cx="33.3" cy="40" r="21.7" fill="#abc"/>)~"
        R"~(<path d="M5 5C40 90 60 -20 95 95Z" fill="#f00" fill-rule="evenodd"/></svg>)~");
    CHECK(rasterize_document(messy, 100, 100) == rasterize_document(parse_svg(serialize_svg(messy)), 100, 100));
}

TEST_CASE("packed counts match per-pixel loop")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        MaskBitmap a(100, 100), b(100, 100);
        std::size_t na = 0, ni = 0, nu = 0;
        for (int y = 0; y < 100; ++y) {
            for (int x = 0; x < 100; ++x) {
                const bool pa = rng() % 3 == 0, pb = rng() % 2 == 0;
                if (pa)
                    a.set(x, y, true);
                if (pb)
                    b.set(x, y, true);
                na += pa;
                ni += pa && pb;
                nu += pa || pb;
            }
        }
        CHECK(mask_area(a) == na);
        CHECK(intersection_count(a, b) == ni);
        CHECK(union_count(a, b) == nu);
        CHECK(intersection_count(a, a) == mask_area(a));
    }
    MaskBitmap l(10, 10), r(10, 10);
    l.fill_span(0, 0, 5);
    r.fill_span(0, 5, 10);
    CHECK(intersection_count(l, r) == 0);
    CHECK(union_count(l, r) == 10);
    CHECK_THROWS_AS(union_count(MaskBitmap(3, 3), MaskBitmap(4, 3)), Error);
}

TEST_CASE("netpbm encoding")
{
    MaskBitmap m(2, 1);
    m.set(0, 0, true);
    const auto pgm = encode_pgm(m);
    const std::string header = "P5\n2 1\n255\n";
    REQUIRE(pgm.size() == header.size() + 2);
    CHECK(std::string(pgm.begin(), pgm.begin() + header.size()) == header);
    CHECK(pgm[header.size()] == 0xFF);
    CHECK(pgm[header.size() + 1] == 0x00);

    const auto big = encode_pgm(MaskBitmap(100, 100));
    CHECK(std::string(big.begin(), big.begin() + 15) == "P5\n100 100\n255\n");

    const auto ppm = encode_ppm(ColorBitmap(1, 1));
    REQUIRE(ppm.size() >= 3);
    CHECK(ppm[ppm.size() - 3] == 0xFF);
    CHECK(ppm[ppm.size() - 2] == 0xFF);
    CHECK(ppm[ppm.size() - 1] == 0xFF);
}

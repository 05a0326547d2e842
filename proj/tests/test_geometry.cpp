#include "svgforge/error.hpp"
#include "svgforge/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace svgforge;

TEST_CASE("cubic bbox: degenerate line")
{
    const Bbox b = cubic_bbox({{0, 0}, {0, 0}, {10, 0}, {10, 0}});
    CHECK(b == Bbox{0, 0, 10, 0});
}

TEST_CASE("cubic bbox: interior extremum at t=0.5")
{
    const Bbox b = cubic_bbox({{0, 0}, {0, 10}, {10, 10}, {10, 0}});
    CHECK(b.min_x == doctest::Approx(0));
    CHECK(b.max_x == doctest::Approx(10));
    CHECK(b.min_y == doctest::Approx(0));
    CHECK(b.max_y == doctest::Approx(7.5).epsilon(1e-12));
}

TEST_CASE("cubic bbox matches dense sampling")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int trial = 0; trial < 1000; ++trial) {
        const CubicBezier c{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
        const Bbox b = cubic_bbox(c);
        Bbox s = Bbox::of_point(c.p0);
        constexpr int n = 100000;
        for (int i = 0; i <= n; ++i)
            s.include(c.eval(static_cast<double>(i) / n));
        // sampled box is inside the analytic one and close to it
        REQUIRE(b.min_x <= s.min_x + 1e-9);
        REQUIRE(b.max_x >= s.max_x - 1e-9);
        REQUIRE(b.min_y <= s.min_y + 1e-9);
        REQUIRE(b.max_y >= s.max_y - 1e-9);
        REQUIRE(s.min_x - b.min_x < 1e-6);
        REQUIRE(b.max_x - s.max_x < 1e-6);
        REQUIRE(s.min_y - b.min_y < 1e-6);
        REQUIRE(b.max_y - s.max_y < 1e-6);
    }
}

TEST_CASE("path bbox")
{
    CHECK(path_bbox(CommandList{PathCommand::move_to({0, 0}), PathCommand::line_to({10, 5})}) == Bbox{0, 0, 10, 5});
    CHECK(path_bbox(CommandList{PathCommand::move_to({0, 0}), PathCommand::line_to({1, 1}),
                                PathCommand::move_to({9, 9}), PathCommand::line_to({10, 10})}) ==
          Bbox{0, 0, 10, 10});
    const CommandList mixed{PathCommand::move_to({0, 0}), PathCommand::cubic_to({0, 10}, {10, 10}, {10, 0}),
                            PathCommand::line_to({12, -2})};
    const Bbox b = path_bbox(mixed);
    CHECK(b.min_x == doctest::Approx(0));
    CHECK(b.max_x == doctest::Approx(12));
    CHECK(b.min_y == doctest::Approx(-2));
    CHECK(b.max_y == doctest::Approx(7.5));
    CHECK_THROWS_AS(path_bbox(CommandList{}), Error);
}

TEST_CASE("affine composition and inverse")
{
    const AffineTransform t = AffineTransform::translate(3, 0) * AffineTransform::scale(2);
    const Point p = t.apply({1, 1});
    CHECK(p.x == doctest::Approx(5));
    CHECK(p.y == doctest::Approx(2));

    const CommandList cmds{PathCommand::move_to({1, 2}), PathCommand::cubic_to({3, 4}, {5, 6}, {7, 8}),
                           PathCommand::close()};
    CHECK(apply_affine(AffineTransform::identity(), cmds) == cmds);

    const AffineTransform r = AffineTransform::rotate_deg(33) * AffineTransform::translate(4, -7) *
                              AffineTransform::scale(1.5, 0.7);
    const CommandList back = apply_affine(r.inverse(), apply_affine(r, cmds));
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        for (int k = 0; k < cmds[i].point_count(); ++k) {
            CHECK(std::abs(back[i].pts[k].x - cmds[i].pts[k].x) < 1e-9);
            CHECK(std::abs(back[i].pts[k].y - cmds[i].pts[k].y) < 1e-9);
        }
    }
    CHECK_THROWS_AS(AffineTransform::scale(0).inverse(), Error);
}

TEST_CASE("quadratic elevation")
{
    const CubicBezier c = quad_to_cubic({0, 0}, {5, 10}, {10, 0});
    CHECK(c.c1.x == doctest::Approx(10.0 / 3));
    CHECK(c.c1.y == doctest::Approx(20.0 / 3));
    CHECK(c.c2.x == doctest::Approx(20.0 / 3));
    CHECK(c.c2.y == doctest::Approx(20.0 / 3));

    double worst = 0;
    for (int i = 0; i <= 1000; ++i) {
        const double t = i / 1000.0;
        const double mt = 1 - t;
        const Point q{2 * mt * t * 5 + t * t * 10, 2 * mt * t * 10};
        const Point p = c.eval(t);
        worst = std::max(worst, std::hypot(p.x - q.x, p.y - q.y));
    }
    CHECK(worst < 1e-9);

    const CubicBezier line = quad_to_cubic({0, 0}, {5, 0}, {10, 0});
    CHECK(line.c1.y == 0);
    CHECK(line.c2.y == 0);
}

TEST_CASE("arc to cubics")
{
    const CommandList arc = arc_to_cubics({0, 0}, 10, 10, 0, false, true, {20, 0});
    REQUIRE(arc.size() == 2);
    Point cur{0, 0};
    double worst = 0;
    for (const auto& c : arc) {
        REQUIRE(c.kind == CommandKind::CubicTo);
        const CubicBezier b{cur, c.pts[0], c.pts[1], c.pts[2]};
        for (int i = 0; i <= 200; ++i) {
            const Point p = b.eval(i / 200.0);
            worst = std::max(worst, std::abs(std::hypot(p.x - 10, p.y) - 10));
        }
        cur = c.pts[2];
    }
    CHECK(worst < 0.03);
    CHECK(arc.back().pts[2] == Point{20, 0});

    const CommandList flat = arc_to_cubics({0, 0}, 0, 5, 0, false, true, {7, 3});
    REQUIRE(flat.size() == 1);
    CHECK(flat[0].kind == CommandKind::LineTo);
    CHECK(flat[0].pts[0] == Point{7, 3});
    CHECK(arc_to_cubics({1, 1}, 5, 5, 0, false, false, {1, 1}).empty());
}

TEST_CASE("solve_quadratic")
{
    std::array<double, 2> r{};
    REQUIRE(solve_quadratic(1, -3, 2, r) == 2);
    CHECK(std::min(r[0], r[1]) == doctest::Approx(1));
    CHECK(std::max(r[0], r[1]) == doctest::Approx(2));
    REQUIRE(solve_quadratic(0, 2, -4, r) == 1);
    CHECK(r[0] == doctest::Approx(2));
    CHECK(solve_quadratic(0, 0, 1, r) == 0);
    CHECK(solve_quadratic(1, 0, 1, r) == 0);
}

#pragma once

#include <array>
#include <span>
#include <vector>

namespace svgforge {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
};

/// Affine map (x, y) -> (a*x + c*y + e, b*x + d*y + f), the SVG matrix(a b c d e f) convention.
struct AffineTransform {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0, e = 0.0, f = 0.0;

    static AffineTransform identity() { return {}; }
    static AffineTransform translate(double dx, double dy) { return {1, 0, 0, 1, dx, dy}; }
    static AffineTransform scale(double sx, double sy) { return {sx, 0, 0, sy, 0, 0}; }
    static AffineTransform scale(double s) { return scale(s, s); }
    static AffineTransform rotate_deg(double degrees);

    Point apply(Point p) const { return {a * p.x + c * p.y + e, b * p.x + d * p.y + f}; }

    // (*this) ∘ rhs: apply rhs first, then *this.
    AffineTransform operator*(const AffineTransform& rhs) const;

    AffineTransform inverse() const;
    bool is_finite() const;

    friend bool operator==(const AffineTransform&, const AffineTransform&) = default;
};

enum class CommandKind { MoveTo, LineTo, CubicTo, ClosePath };

struct PathCommand {
    CommandKind kind = CommandKind::MoveTo;
    // MoveTo/LineTo use pts[0]; CubicTo uses pts[0], pts[1] (controls) and pts[2] (end).
    std::array<Point, 3> pts{};

    static PathCommand move_to(Point p) { return {CommandKind::MoveTo, {p, {}, {}}}; }
    static PathCommand line_to(Point p) { return {CommandKind::LineTo, {p, {}, {}}}; }
    static PathCommand cubic_to(Point c1, Point c2, Point p) { return {CommandKind::CubicTo, {c1, c2, p}}; }
    static PathCommand close() { return {CommandKind::ClosePath, {}}; }

    int point_count() const;
    Point end_point() const; // undefined for ClosePath

    friend bool operator==(const PathCommand& l, const PathCommand& r);
};

using CommandList = std::vector<PathCommand>;

/// Checks the start invariant (nonempty lists begin with MoveTo) and coordinate finiteness.
bool is_well_formed(std::span<const PathCommand> commands);

struct Bbox {
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    double max_dim() const { return width() > height() ? width() : height(); }
    Point center() const { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }

    static Bbox of_point(Point p) { return {p.x, p.y, p.x, p.y}; }
    void include(Point p);
    void include(const Bbox& other);

    friend bool operator==(const Bbox&, const Bbox&) = default;
};

struct CubicBezier {
    Point p0, c1, c2, p1;

    Point eval(double t) const;
};

Bbox cubic_bbox(const CubicBezier& c);

/// Union of the boxes of all drawn geometry; throws EmptyPath when the list has no points.
Bbox path_bbox(std::span<const PathCommand> commands);

CommandList apply_affine(const AffineTransform& t, std::span<const PathCommand> commands);

CubicBezier quad_to_cubic(Point p0, Point q, Point p2);

/// SVG elliptical arc in endpoint form as CubicTo commands of at most 90 degrees each.
/// rx or ry equal to zero yields a single LineTo(p1); p0 == p1 yields nothing.
CommandList arc_to_cubics(Point p0, double rx, double ry, double x_rotation_deg,
                                       bool large_arc, bool sweep, Point p1);

/// Real roots of a*t^2 + b*t + c = 0, handling linear and constant degenerations.
int solve_quadratic(double a, double b, double c, std::array<double, 2>& roots);

} // namespace svgforge

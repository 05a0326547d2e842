#include "svgforge/geometry.hpp"
#include "svgforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace svgforge {

AffineTransform AffineTransform::rotate_deg(double degrees)
{
    const double r = degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(r);
    const double sn = std::sin(r);
    return {cs, sn, -sn, cs, 0.0, 0.0};
}

AffineTransform AffineTransform::operator*(const AffineTransform& m) const
{
    return {
        a * m.a + c * m.b,
        b * m.a + d * m.b,
        a * m.c + c * m.d,
        b * m.c + d * m.d,
        a * m.e + c * m.f + e,
        b * m.e + d * m.f + f,
    };
}

AffineTransform AffineTransform::inverse() const
{
    const double det = a * d - b * c;
    if (det == 0.0 || !std::isfinite(det))
        throw Error(ErrorCode::InvalidArgument, "singular transform");
    const double ia = d / det;
    const double ib = -b / det;
    const double ic = -c / det;
    const double id = a / det;
    return {ia, ib, ic, id, -(ia * e + ic * f), -(ib * e + id * f)};
}

bool AffineTransform::is_finite() const
{
    return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d) &&
           std::isfinite(e) && std::isfinite(f);
}

int PathCommand::point_count() const
{
    switch (kind) {
    case CommandKind::MoveTo:
    case CommandKind::LineTo: return 1;
    case CommandKind::CubicTo: return 3;
    case CommandKind::ClosePath: return 0;
    }
    return 0;
}

Point PathCommand::end_point() const
{
    return kind == CommandKind::CubicTo ? pts[2] : pts[0];
}

bool operator==(const PathCommand& l, const PathCommand& r)
{
    if (l.kind != r.kind)
        return false;
    for (int i = 0; i < l.point_count(); ++i) {
        if (l.pts[i] != r.pts[i])
            return false;
    }
    return true;
}

bool is_well_formed(std::span<const PathCommand> commands)
{
    if (commands.empty())
        return true;
    if (commands.front().kind != CommandKind::MoveTo)
        return false;
    for (const auto& cmd : commands) {
        for (int i = 0; i < cmd.point_count(); ++i) {
            if (!std::isfinite(cmd.pts[i].x) || !std::isfinite(cmd.pts[i].y))
                return false;
        }
    }
    return true;
}

void Bbox::include(Point p)
{
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
}

void Bbox::include(const Bbox& o)
{
    min_x = std::min(min_x, o.min_x);
    min_y = std::min(min_y, o.min_y);
    max_x = std::max(max_x, o.max_x);
    max_y = std::max(max_y, o.max_y);
}

Point CubicBezier::eval(double t) const
{
    const double u = 1.0 - t;
    const double w0 = u * u * u;
    const double w1 = 3.0 * u * u * t;
    const double w2 = 3.0 * u * t * t;
    const double w3 = t * t * t;
    return {w0 * p0.x + w1 * c1.x + w2 * c2.x + w3 * p1.x,
            w0 * p0.y + w1 * c1.y + w2 * c2.y + w3 * p1.y};
}

int solve_quadratic(double a, double b, double c, std::array<double, 2>& roots)
{
    constexpr double eps = 1e-12;
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
    if (scale == 0.0)
        return 0;
    if (std::abs(a) <= eps * scale) {
        if (std::abs(b) <= eps * scale)
            return 0;
        roots[0] = -c / b;
        return 1;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0)
        return 0;
    if (disc == 0.0) {
        roots[0] = -b / (2.0 * a);
        return 1;
    }
    // q = -(b + sign(b) sqrt(disc)) / 2 avoids cancellation between b and the root.
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + std::copysign(sq, b));
    roots[0] = q / a;
    roots[1] = c / q;
    if (roots[0] > roots[1])
        std::swap(roots[0], roots[1]);
    return 2;
}

namespace {

// Derivative of the cubic Bernstein polynomial along one axis, as a*t^2 + b*t + c.
void axis_extrema(double p0, double c1, double c2, double p1, std::array<double, 2>& roots, int& n)
{
    const double a = -p0 + 3.0 * c1 - 3.0 * c2 + p1;
    const double b = 2.0 * (p0 - 2.0 * c1 + c2);
    const double c = c1 - p0;
    n = solve_quadratic(a, b, c, roots);
}

} // namespace

Bbox cubic_bbox(const CubicBezier& cb)
{
    Bbox box = Bbox::of_point(cb.p0);
    box.include(cb.p1);
    std::array<double, 2> roots{};
    int n = 0;
    axis_extrema(cb.p0.x, cb.c1.x, cb.c2.x, cb.p1.x, roots, n);
    for (int i = 0; i < n; ++i) {
        if (roots[i] > 0.0 && roots[i] < 1.0)
            box.include(cb.eval(roots[i]));
    }
    axis_extrema(cb.p0.y, cb.c1.y, cb.c2.y, cb.p1.y, roots, n);
    for (int i = 0; i < n; ++i) {
        if (roots[i] > 0.0 && roots[i] < 1.0)
            box.include(cb.eval(roots[i]));
    }
    return box;
}

Bbox path_bbox(std::span<const PathCommand> commands)
{
    Bbox box;
    bool any = false;
    Point current{};
    for (const auto& cmd : commands) {
        switch (cmd.kind) {
        case CommandKind::MoveTo:
        case CommandKind::LineTo:
            if (!any) {
                box = Bbox::of_point(cmd.pts[0]);
                any = true;
            } else {
                box.include(cmd.pts[0]);
            }
            current = cmd.pts[0];
            break;
        case CommandKind::CubicTo: {
            const Bbox cb = cubic_bbox({current, cmd.pts[0], cmd.pts[1], cmd.pts[2]});
            if (!any) {
                box = cb;
                any = true;
            } else {
                box.include(cb);
            }
            current = cmd.pts[2];
            break;
        }
        case CommandKind::ClosePath: break;
        }
    }
    if (!any)
        throw Error(ErrorCode::EmptyPath, "path has no drawn geometry");
    return box;
}

CommandList apply_affine(const AffineTransform& t, std::span<const PathCommand> commands)
{
    CommandList out(commands.begin(), commands.end());
    for (auto& cmd : out) {
        for (int i = 0; i < cmd.point_count(); ++i)
            cmd.pts[i] = t.apply(cmd.pts[i]);
    }
    return out;
}

CubicBezier quad_to_cubic(Point p0, Point q, Point p2)
{
    constexpr double two_thirds = 2.0 / 3.0;
    return {p0, p0 + two_thirds * (q - p0), p2 + two_thirds * (q - p2), p2};
}

namespace {

double vector_angle(double ux, double uy, double vx, double vy)
{
    const double dot = ux * vx + uy * vy;
    const double cross = ux * vy - uy * vx;
    return std::atan2(cross, dot);
}

} // namespace

CommandList arc_to_cubics(Point p0, double rx, double ry, double x_rotation_deg, bool large_arc,
                          bool sweep, Point p1)
{
    CommandList out;
    if (p0 == p1)
        return out;
    rx = std::abs(rx);
    ry = std::abs(ry);
    if (rx == 0.0 || ry == 0.0) {
        out.push_back(PathCommand::line_to(p1));
        return out;
    }

    const double phi = x_rotation_deg * std::numbers::pi / 180.0;
    const double cos_phi = std::cos(phi);
    const double sin_phi = std::sin(phi);

    // Endpoint to center parameterization (SVG implementation notes, F.6.5).
    const double dx2 = 0.5 * (p0.x - p1.x);
    const double dy2 = 0.5 * (p0.y - p1.y);
    const double x1p = cos_phi * dx2 + sin_phi * dy2;
    const double y1p = -sin_phi * dx2 + cos_phi * dy2;

    const double lambda = (x1p * x1p) / (rx * rx) + (y1p * y1p) / (ry * ry);
    if (lambda > 1.0) {
        const double s = std::sqrt(lambda);
        rx *= s;
        ry *= s;
    }

    const double rx2 = rx * rx;
    const double ry2 = ry * ry;
    const double num = rx2 * ry2 - rx2 * y1p * y1p - ry2 * x1p * x1p;
    const double den = rx2 * y1p * y1p + ry2 * x1p * x1p;
    double coef = den > 0.0 ? std::sqrt(std::max(0.0, num / den)) : 0.0;
    if (large_arc == sweep)
        coef = -coef;
    const double cxp = coef * (rx * y1p / ry);
    const double cyp = coef * -(ry * x1p / rx);

    const double cx = cos_phi * cxp - sin_phi * cyp + 0.5 * (p0.x + p1.x);
    const double cy = sin_phi * cxp + cos_phi * cyp + 0.5 * (p0.y + p1.y);

    const double ux = (x1p - cxp) / rx;
    const double uy = (y1p - cyp) / ry;
    const double vx = (-x1p - cxp) / rx;
    const double vy = (-y1p - cyp) / ry;
    const double theta1 = vector_angle(1.0, 0.0, ux, uy);
    double delta = vector_angle(ux, uy, vx, vy);
    if (!sweep && delta > 0.0)
        delta -= 2.0 * std::numbers::pi;
    else if (sweep && delta < 0.0)
        delta += 2.0 * std::numbers::pi;

    const int segments =
        std::max(1, static_cast<int>(std::ceil(std::abs(delta) / (0.5 * std::numbers::pi) - 1e-9)));
    const double step = delta / segments;
    const double alpha = 4.0 / 3.0 * std::tan(step / 4.0);

    auto on_ellipse = [&](double angle) {
        const double ex = rx * std::cos(angle);
        const double ey = ry * std::sin(angle);
        return Point{cos_phi * ex - sin_phi * ey + cx, sin_phi * ex + cos_phi * ey + cy};
    };
    auto tangent = [&](double angle) {
        const double tx = -rx * std::sin(angle);
        const double ty = ry * std::cos(angle);
        return Point{cos_phi * tx - sin_phi * ty, sin_phi * tx + cos_phi * ty};
    };

    Point start = p0;
    for (int i = 0; i < segments; ++i) {
        const double a0 = theta1 + i * step;
        const double a1 = a0 + step;
        const Point end = (i + 1 == segments) ? p1 : on_ellipse(a1);
        const Point c1 = start + alpha * tangent(a0);
        const Point c2 = end - alpha * tangent(a1);
        out.push_back(PathCommand::cubic_to(c1, c2, end));
        start = end;
    }
    return out;
}

} // namespace svgforge

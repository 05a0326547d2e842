#pragma once

#include "svgforge/library.hpp"
#include "svgforge/model.hpp"
#include "svgforge/raster.hpp"
#include "svgforge/tokens.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace svgforge::testing {

inline CommandList polygon_path(const std::vector<Point>& pts)
{
    CommandList out{PathCommand::move_to(pts[0])};
    for (std::size_t i = 1; i < pts.size(); ++i)
        out.push_back(PathCommand::line_to(pts[i]));
    out.push_back(PathCommand::close());
    return out;
}

inline CommandList rect_path(double x0, double y0, double x1, double y1)
{
    return polygon_path({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

inline CommandList circle_path(double cx, double cy, double r)
{
    constexpr double k = 0.5522847498;
    return {
        PathCommand::move_to({cx + r, cy}),
        PathCommand::cubic_to({cx + r, cy + k * r}, {cx + k * r, cy + r}, {cx, cy + r}),
        PathCommand::cubic_to({cx - k * r, cy + r}, {cx - r, cy + k * r}, {cx - r, cy}),
        PathCommand::cubic_to({cx - r, cy - k * r}, {cx - k * r, cy - r}, {cx, cy - r}),
        PathCommand::cubic_to({cx + k * r, cy - r}, {cx + r, cy - k * r}, {cx + r, cy}),
        PathCommand::close(),
    };
}

// Star-shaped random polygon around the origin.
inline CommandList random_blob(std::mt19937_64& rng, int vertices)
{
    std::uniform_real_distribution<double> radius(20.0, 50.0);
    std::vector<Point> pts;
    for (int i = 0; i < vertices; ++i) {
        const double a = 2.0 * std::numbers::pi * i / vertices;
        const double r = radius(rng);
        pts.push_back({r * std::cos(a), r * std::sin(a)});
    }
    return polygon_path(pts);
}

inline CommandList jitter(const CommandList& cmds, std::mt19937_64& rng, double amount)
{
    std::uniform_real_distribution<double> d(-amount, amount);
    CommandList out = cmds;
    for (auto& c : out) {
        for (int k = 0; k < c.point_count(); ++k) {
            c.pts[k].x += d(rng);
            c.pts[k].y += d(rng);
        }
    }
    return out;
}

// Random components with families of near-duplicates, so some pairs merge and some chain.
inline std::vector<Component> random_components(std::mt19937_64& rng, std::size_t n)
{
    std::vector<Component> out;
    std::vector<CommandList> bases;
    std::uniform_int_distribution<int> verts(5, 12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (out.size() < n) {
        CommandList shape;
        if (bases.empty() || u(rng) < 0.35) {
            shape = random_blob(rng, verts(rng));
            bases.push_back(shape);
        } else {
            const auto& base = bases[std::uniform_int_distribution<std::size_t>(0, bases.size() - 1)(rng)];
            shape = jitter(base, rng, u(rng) * 4.0);
        }
        auto norm = normalize_path(shape);
        out.push_back(make_component(static_cast<ComponentId>(out.size()), std::move(norm.commands)));
    }
    return out;
}

// Per-pixel Jaccard straight from get(), no packed words.
inline double naive_jaccard(const MaskBitmap& a, const MaskBitmap& b)
{
    std::size_t inter = 0, uni = 0;
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            const bool pa = a.get(x, y), pb = b.get(x, y);
            inter += (pa && pb) ? 1 : 0;
            uni += (pa || pb) ? 1 : 0;
        }
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Unpruned double loop plus a plain disjoint-set forest; returns each component's root.
inline std::vector<ComponentId> naive_parents(const std::vector<Component>& comps, double threshold)
{
    struct P {
        int i, j;
        double s;
    };
    std::vector<P> pairs;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        for (std::size_t j = i + 1; j < comps.size(); ++j) {
            const double s = naive_jaccard(comps[i].mask, comps[j].mask);
            if (s >= threshold)
                pairs.push_back({static_cast<int>(i), static_cast<int>(j), s});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const P& a, const P& b) {
        if (a.s != b.s)
            return a.s > b.s;
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    std::vector<int> parent(comps.size()), size(comps.size(), 1);
    for (std::size_t i = 0; i < parent.size(); ++i)
        parent[i] = static_cast<int>(i);
    auto find = [&](int x) {
        while (parent[x] != x)
            x = parent[x];
        return x;
    };
    for (const auto& p : pairs) {
        int a = find(p.i), b = find(p.j);
        if (a == b)
            continue;
        if (size[a] < size[b] || (size[a] == size[b] && b < a))
            std::swap(a, b);
        parent[b] = a;
        size[a] += size[b];
    }
    std::vector<ComponentId> roots(comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i)
        roots[i] = find(static_cast<int>(i));
    return roots;
}

inline Vocabulary small_vocab(std::size_t categories, std::size_t components)
{
    std::vector<std::string> cats;
    for (std::size_t i = 0; i < categories; ++i)
        cats.push_back("cat" + std::to_string(i));
    std::vector<ComponentId> comps;
    for (std::size_t i = 0; i < components; ++i)
        comps.push_back(static_cast<ComponentId>(i));
    return Vocabulary(cats, comps);
}

// Grammar-valid random sequence with `groups` placements.
inline TokenSequence random_sequence(std::mt19937_64& rng, const Vocabulary& v, std::size_t groups,
                                     std::size_t category)
{
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    TokenSequence t{kBos, v.id_of(TokenKind::Category, static_cast<int>(category))};
    for (std::size_t g = 0; g < groups; ++g) {
        t.push_back(v.id_of(TokenKind::Component, pick(static_cast<int>(v.component_count()))));
        t.push_back(v.id_of(TokenKind::Offset, pick(kOffsetBins)));
        t.push_back(v.id_of(TokenKind::Offset, pick(kOffsetBins)));
        t.push_back(v.id_of(TokenKind::Scale, pick(kScaleBins)));
        for (int c = 0; c < 3; ++c)
            t.push_back(v.id_of(TokenKind::Color, pick(kColorValues)));
    }
    t.push_back(kEos);
    return t;
}

inline Library library_from_components(std::vector<Component> comps)
{
    return merge_union_find(std::move(comps), {}, kDefaultSimilarityThreshold);
}

} // namespace svgforge::testing

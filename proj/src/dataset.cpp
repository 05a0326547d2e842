#include "svgforge/dataset.hpp"
#include "svgforge/error.hpp"
#include "svgforge/io.hpp"
#include "svgforge/log.hpp"
#include "svgforge/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <unordered_set>

namespace svgforge {

namespace fs = std::filesystem;

std::vector<ManifestRecord> parse_manifest(std::string_view text)
{
    std::vector<ManifestRecord> out;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos)
            throw Error(ErrorCode::InvalidArgument, fmt::format("manifest line {}: expected 3 tab-separated fields", line_no));
        ManifestRecord r{std::string(line.substr(0, t1)), std::string(line.substr(t1 + 1, t2 - t1 - 1)),
                         std::string(line.substr(t2 + 1))};
        if (r.id.empty() || r.category.empty() || r.relative_path.empty())
            throw Error(ErrorCode::InvalidArgument, fmt::format("manifest line {}: empty field", line_no));
        if (!seen.insert(r.id).second)
            throw Error(ErrorCode::InvalidArgument, fmt::format("manifest line {}: duplicate id '{}'", line_no, r.id));
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_manifest(std::span<const ManifestRecord> records)
{
    std::string out;
    for (const auto& r : records)
        out += fmt::format("{}\t{}\t{}\n", r.id, r.category, r.relative_path);
    return out;
}

std::vector<ManifestRecord> read_manifest(const fs::path& path)
{
    return parse_manifest(read_text_file(path));
}

void write_manifest(std::span<const ManifestRecord> records, const fs::path& path)
{
    write_text_file(path, format_manifest(records));
}

std::vector<CorpusEntry> load_corpus(const fs::path& manifest)
{
    std::vector<CorpusEntry> out;
    const fs::path base = manifest.parent_path();
    for (auto& r : read_manifest(manifest)) {
        const fs::path p = base / r.relative_path;
        out.push_back({r.id, r.category, parse_svg(read_text_file(p)), p});
    }
    return out;
}

std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::Kept: return "Kept";
    case Verdict::NoFillAttr: return "NoFillAttr";
    case Verdict::BlackWhiteOnly: return "BlackWhiteOnly";
    case Verdict::BlackDominant: return "BlackDominant";
    case Verdict::ParseError: return "ParseError";
    case Verdict::Degenerate: return "Degenerate";
    case Verdict::Duplicate: return "Duplicate";
    }
    return "?";
}

Verdict detect_colorless(const SvgDocument& doc)
{
    if (doc.paths.empty())
        return Verdict::Degenerate;
    const bool any_fill = std::any_of(doc.paths.begin(), doc.paths.end(), [](const SvgPath& p) { return p.fill_specified; });
    if (!any_fill)
        return Verdict::NoFillAttr;
    if (!(doc.viewbox.width > 0.0) || !(doc.viewbox.height > 0.0))
        return Verdict::Degenerate;

    ColorBitmap bmp;
    try {
        bmp = rasterize_document(doc, kCleanRasterSize, kCleanRasterSize);
    } catch (const Error&) {
        return Verdict::ParseError;
    }
    constexpr RgbColor black{0, 0, 0};
    constexpr RgbColor white{255, 255, 255};
    std::size_t n_black = 0;
    std::size_t n_color = 0;
    for (const RgbColor& c : bmp.pixels()) {
        if (c == black)
            ++n_black;
        else if (c != white)
            ++n_color;
    }
    if (n_color == 0)
        return Verdict::BlackWhiteOnly;
    if (n_black > n_color)
        return Verdict::BlackDominant;
    return Verdict::Kept;
}

std::size_t CleanReport::kept() const
{
    return count(Verdict::Kept);
}

std::size_t CleanReport::count(Verdict v) const
{
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [v](const CleanEntry& e) { return e.verdict == v; }));
}

std::string CleanReport::to_csv() const
{
    std::string out = "id,verdict,reason\n";
    for (const auto& e : entries) {
        if (e.verdict == Verdict::Kept)
            out += fmt::format("{},kept,\n", e.id);
        else
            out += fmt::format("{},removed,{}\n", e.id, to_string(e.verdict));
    }
    return out;
}

SvgDocument normalize_viewbox(const SvgDocument& doc)
{
    std::optional<Bbox> box;
    for (const auto& p : doc.paths) {
        if (p.commands.empty())
            continue;
        const Bbox b = path_bbox(p.commands);
        if (box)
            box->include(b);
        else
            box = b;
    }
    if (!box || box->max_dim() < 1e-9)
        throw Error(ErrorCode::EmptyDocument, "document has no drawable extent");

    SvgDocument out = doc;
    out.viewbox = ViewBox{};
    const double s = 100.0 / box->max_dim();
    const double tx = -box->min_x * s + 0.5 * (100.0 - box->width() * s);
    const double ty = -box->min_y * s + 0.5 * (100.0 - box->height() * s);
    // Already canonical: keep coordinates bit-identical.
    if (std::abs(s - 1.0) < 1e-12 && std::abs(tx) < 1e-9 && std::abs(ty) < 1e-9)
        return out;
    const AffineTransform t{s, 0.0, 0.0, s, tx, ty};
    for (auto& p : out.paths)
        p.commands = apply_affine(t, p.commands);
    return out;
}

std::vector<std::size_t> duplicate_indices(std::span<const CorpusEntry> entries)
{
    std::unordered_set<std::string> seen;
    std::vector<std::size_t> dups;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!seen.insert(serialize_svg(entries[i].document)).second)
            dups.push_back(i);
    }
    return dups;
}

std::vector<CorpusEntry> dedup_entries(std::span<const CorpusEntry> entries)
{
    const auto dups = duplicate_indices(entries);
    std::vector<CorpusEntry> out;
    std::size_t k = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (k < dups.size() && dups[k] == i) {
            ++k;
            continue;
        }
        out.push_back(entries[i]);
    }
    return out;
}

CleanResult clean_corpus(std::vector<CorpusEntry> entries, std::span<const CleanEntry> failures)
{
    CleanResult result;
    std::map<std::string, CleanEntry> verdicts;
    for (const auto& f : failures)
        verdicts[f.id] = f;

    std::vector<std::string> order;
    for (const auto& e : entries)
        order.push_back(e.id);
    std::vector<CorpusEntry> survivors;
    for (auto& e : entries) {
        Verdict v = detect_colorless(e.document);
        std::string detail;
        if (v == Verdict::Kept) {
            try {
                e.document = normalize_viewbox(e.document);
            } catch (const Error& err) {
                v = Verdict::Degenerate;
                detail = err.what();
            }
        }
        verdicts[e.id] = {e.id, v, detail};
        if (v == Verdict::Kept)
            survivors.push_back(std::move(e));
    }
    for (std::size_t i : duplicate_indices(survivors))
        verdicts[survivors[i].id].verdict = Verdict::Duplicate;
    for (auto& e : survivors) {
        if (verdicts[e.id].verdict == Verdict::Kept)
            result.kept.push_back(std::move(e));
    }

    // Report rows follow input order; load failures keep their own position.
    std::set<std::string> emitted;
    for (const auto& f : failures) {
        if (emitted.insert(f.id).second)
            result.report.entries.push_back(verdicts[f.id]);
    }
    for (const auto& id : order) {
        if (emitted.insert(id).second)
            result.report.entries.push_back(verdicts[id]);
    }
    return result;
}

std::array<std::size_t, 3> split_counts(std::size_t n, SplitRatios ratios)
{
    const std::array<double, 3> r{ratios.train, ratios.validation, ratios.test};
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t used = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = static_cast<double>(n) * r[i];
        const double fl = std::floor(exact + 1e-9);
        counts[i] = static_cast<std::size_t>(fl);
        frac[i] = exact - fl;
        used += counts[i];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b] + 1e-12; });
    for (std::size_t k = 0; used < n; ++k, ++used)
        ++counts[order[k % 3]];
    return counts;
}

SplitIndices stratified_split(std::span<const std::string> categories, SplitRatios ratios, std::uint64_t seed)
{
    const double sum = ratios.train + ratios.validation + ratios.test;
    if (!(ratios.train > 0.0) || !(ratios.validation > 0.0) || !(ratios.test > 0.0) || std::abs(sum - 1.0) > 1e-9)
        throw Error(ErrorCode::InvalidArgument, "split ratios must be positive and sum to 1");
    std::map<std::string, std::vector<std::size_t>> by_category;
    for (std::size_t i = 0; i < categories.size(); ++i)
        by_category[categories[i]].push_back(i);

    SplitIndices out;
    std::mt19937_64 rng(seed);
    for (auto& [category, idx] : by_category) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto counts = split_counts(idx.size(), ratios);
        auto it = idx.begin();
        out.train.insert(out.train.end(), it, it + counts[0]);
        it += counts[0];
        out.validation.insert(out.validation.end(), it, it + counts[1]);
        it += counts[1];
        out.test.insert(out.test.end(), it, it + counts[2]);
    }
    return out;
}

std::string CorpusStats::to_string() const
{
    std::string out = fmt::format("total={}\n", total);
    if (total > 0)
        out += fmt::format("min_paths={}\nmax_paths={}\nmean_paths={:.4f}\n", min_paths, max_paths, mean_paths);
    for (const auto& c : categories)
        out += fmt::format("category.{}.count={}\ncategory.{}.mean_paths={:.4f}\n", c.category, c.count, c.category,
                           c.mean_paths);
    return out;
}

CorpusStats corpus_stats(std::span<const CorpusEntry> entries)
{
    CorpusStats s;
    if (entries.empty())
        return s;
    std::map<std::string, std::pair<std::size_t, std::size_t>> acc; // count, path sum
    std::size_t path_sum = 0;
    s.min_paths = std::numeric_limits<std::size_t>::max();
    for (const auto& e : entries) {
        const std::size_t n = e.document.paths.size();
        auto& a = acc[e.category];
        ++a.first;
        a.second += n;
        path_sum += n;
        s.min_paths = std::min(s.min_paths, n);
        s.max_paths = std::max(s.max_paths, n);
    }
    s.total = entries.size();
    s.mean_paths = static_cast<double>(path_sum) / static_cast<double>(s.total);
    for (const auto& [cat, a] : acc)
        s.categories.push_back({cat, a.first, static_cast<double>(a.second) / static_cast<double>(a.first)});
    std::stable_sort(s.categories.begin(), s.categories.end(),
                     [](const CategoryStats& a, const CategoryStats& b) { return a.count > b.count; });
    return s;
}

// ------------------------------------------------------------------ synthetic corpus

namespace {

CommandList ellipse(double cx, double cy, double rx, double ry)
{
    constexpr double k = 0.5522847498;
    return {
        PathCommand::move_to({cx + rx, cy}),
        PathCommand::cubic_to({cx + rx, cy + k * ry}, {cx + k * rx, cy + ry}, {cx, cy + ry}),
        PathCommand::cubic_to({cx - k * rx, cy + ry}, {cx - rx, cy + k * ry}, {cx - rx, cy}),
        PathCommand::cubic_to({cx - rx, cy - k * ry}, {cx - k * rx, cy - ry}, {cx, cy - ry}),
        PathCommand::cubic_to({cx + k * rx, cy - ry}, {cx + rx, cy - k * ry}, {cx + rx, cy}),
        PathCommand::close(),
    };
}

CommandList polygon(std::span<const Point> pts)
{
    CommandList out{PathCommand::move_to(pts[0])};
    for (std::size_t i = 1; i < pts.size(); ++i)
        out.push_back(PathCommand::line_to(pts[i]));
    out.push_back(PathCommand::close());
    return out;
}

CommandList star(int points, double inner)
{
    std::vector<Point> pts;
    for (int i = 0; i < 2 * points; ++i) {
        const double a = -std::numbers::pi / 2 + i * std::numbers::pi / points;
        const double r = i % 2 == 0 ? 50.0 : 50.0 * inner;
        pts.push_back({r * std::cos(a), r * std::sin(a)});
    }
    return polygon(pts);
}

struct Primitive {
    CommandList commands; // bbox centered at the origin, longest side 100
    FillRule rule = FillRule::NonZero;
};

Primitive normalized(CommandList cmds, FillRule rule = FillRule::NonZero)
{
    const Bbox b = path_bbox(cmds);
    const double s = 100.0 / b.max_dim();
    const Point c = b.center();
    return {apply_affine(AffineTransform{s, 0, 0, s, -c.x * s, -c.y * s}, cmds), rule};
}

const std::vector<Primitive>& primitives()
{
    static const std::vector<Primitive> prims = [] {
        std::vector<Primitive> p;
        p.push_back(normalized(ellipse(0, 0, 50, 50)));                            // circle
        CommandList ring = ellipse(0, 0, 50, 50);
        const CommandList hole = ellipse(0, 0, 30, 30);
        ring.insert(ring.end(), hole.begin(), hole.end());
        p.push_back(normalized(ring, FillRule::EvenOdd));                          // ring
        p.push_back(normalized(star(5, 0.45)));                                    // star
        p.push_back(normalized(star(6, 0.6)));                                     // rounder star
        const std::array<Point, 4> bar{Point{0, 0}, {100, 0}, {100, 30}, {0, 30}};
        p.push_back(normalized(polygon(bar)));                                     // bar
        const std::array<Point, 4> tall{Point{0, 0}, {25, 0}, {25, 100}, {0, 100}};
        p.push_back(normalized(polygon(tall)));                                    // vertical bar
        CommandList squares;
        for (int i = 0; i < 3; ++i) {
            const double o = i * 20.0;
            const std::array<Point, 4> sq{Point{o, o}, {o + 40, o}, {o + 40, o + 40}, {o, o + 40}};
            const auto part = polygon(sq);
            squares.insert(squares.end(), part.begin(), part.end());
        }
        p.push_back(normalized(squares));                                          // stacked squares
        const std::array<Point, 3> tri{Point{50, 0}, {100, 86.6}, {0, 86.6}};
        p.push_back(normalized(polygon(tri)));                                     // triangle
        p.push_back(normalized(ellipse(0, 0, 50, 25)));                            // ellipse
        return p;
    }();
    return prims;
}

} // namespace

std::vector<CorpusEntry> synth_corpus(const SynthSpec& spec, std::uint64_t seed)
{
    if (spec.categories.empty())
        throw Error(ErrorCode::InvalidSpec, "no categories");
    if (std::set<std::string>(spec.categories.begin(), spec.categories.end()).size() != spec.categories.size())
        throw Error(ErrorCode::InvalidSpec, "duplicate category names");
    if (spec.total == 0 || spec.total % spec.categories.size() != 0)
        throw Error(ErrorCode::InvalidSpec, fmt::format("total {} is not a positive multiple of {} categories", spec.total,
                                                        spec.categories.size()));
    if (spec.min_paths == 0 || spec.min_paths > spec.max_paths)
        throw Error(ErrorCode::InvalidSpec, fmt::format("bad path range [{}, {}]", spec.min_paths, spec.max_paths));

    std::mt19937_64 rng(seed);
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    const auto& prims = primitives();
    const std::size_t per_category = spec.total / spec.categories.size();
    std::vector<CorpusEntry> out;
    out.reserve(spec.total);
    for (std::size_t c = 0; c < spec.categories.size(); ++c) {
        // Palette channels stay inside [40, 215], so no pixel is black or white.
        std::vector<RgbColor> palette;
        for (int i = 0; i < 5; ++i)
            palette.push_back(RgbColor::from_ints(uniform_int(40, 215), uniform_int(40, 215), uniform_int(40, 215)));
        std::vector<std::size_t> shapes;
        for (int i = 0; i < 4; ++i)
            shapes.push_back(static_cast<std::size_t>(uniform_int(0, static_cast<int>(prims.size()) - 1)));

        for (std::size_t k = 0; k < per_category; ++k) {
            CorpusEntry e;
            e.id = fmt::format("{}_{:04}", spec.categories[c], k);
            e.category = spec.categories[c];
            e.source_path = e.id + ".svg";
            const int n_paths = uniform_int(static_cast<int>(spec.min_paths), static_cast<int>(spec.max_paths));
            for (int p = 0; p < n_paths; ++p) {
                // Mostly category shapes, occasionally any primitive.
                const std::size_t shape = uniform_int(0, 4) == 0
                                              ? static_cast<std::size_t>(uniform_int(0, static_cast<int>(prims.size()) - 1))
                                              : shapes[static_cast<std::size_t>(uniform_int(0, 3))];
                const double scale = uniform(0.08, 0.6);
                const double cx = uniform(5.0, 95.0);
                const double cy = uniform(5.0, 95.0);
                SvgPath path;
                path.commands = apply_affine(AffineTransform{scale, 0, 0, scale, cx, cy}, prims[shape].commands);
                path.fill_rule = prims[shape].rule;
                path.fill = palette[static_cast<std::size_t>(uniform_int(0, 4))];
                path.fill_specified = true;
                e.document.paths.push_back(std::move(path));
            }
            out.push_back(std::move(e));
        }
    }
    return out;
}

} // namespace svgforge

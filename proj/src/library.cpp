#include "svgforge/library.hpp"
#include "svgforge/error.hpp"
#include "svgforge/log.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace svgforge {

Bbox component_viewport()
{
    const double h = kComponentExtent / 2.0;
    return {-h, -h, h, h};
}

Component make_component(ComponentId id, CommandList normalized, FillRule rule)
{
    Component c;
    c.id = id;
    c.fill_rule = rule;
    c.mask = rasterize_path(normalized, kComponentMaskSize, kComponentMaskSize, rule, component_viewport());
    c.area = mask_area(c.mask);
    c.commands = std::move(normalized);
    return c;
}

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1)
{
    for (std::size_t i = 0; i < n; ++i)
        parent_[i] = static_cast<ComponentId>(i);
}

ComponentId UnionFind::find(ComponentId x)
{
    ComponentId root = x;
    while (parent_[root] != root)
        root = parent_[root];
    while (parent_[x] != root) {
        const ComponentId next = parent_[x];
        parent_[x] = root;
        x = next;
    }
    return root;
}

ComponentId UnionFind::unite(ComponentId x, ComponentId y)
{
    ComponentId rx = find(x);
    ComponentId ry = find(y);
    if (rx == ry)
        return -1;
    // rx becomes the surviving root: larger set, or lower id on a size tie.
    if (size_[rx] < size_[ry] || (size_[rx] == size_[ry] && ry < rx))
        std::swap(rx, ry);
    parent_[ry] = rx;
    size_[rx] += size_[ry];
    return rx;
}

ComponentId Library::find(ComponentId id) const
{
    if (id < 0 || static_cast<std::size_t>(id) >= parent.size())
        throw Error(ErrorCode::UnknownComponent, fmt::format("component {}", id));
    return parent[id];
}

bool Library::is_root(ComponentId id) const { return find(id) == id; }

std::vector<ComponentId> Library::roots() const
{
    std::vector<ComponentId> out;
    for (std::size_t i = 0; i < parent.size(); ++i) {
        if (parent[i] == static_cast<ComponentId>(i))
            out.push_back(static_cast<ComponentId>(i));
    }
    return out;
}

NormalizedPath normalize_path(std::span<const PathCommand> commands)
{
    const Bbox box = path_bbox(commands);
    const double max_dim = box.max_dim();
    if (max_dim < 1e-6)
        throw Error(ErrorCode::DegeneratePath, fmt::format("longest side {} is below 1e-6", max_dim));
    const Point center = box.center();
    const AffineTransform t =
        AffineTransform::scale(kComponentExtent / max_dim) * AffineTransform::translate(-center.x, -center.y);
    return {apply_affine(t, commands), center, max_dim};
}

Extraction extract_components(std::span<const CorpusDocument> corpus)
{
    Extraction out;
    for (const auto& entry : corpus) {
        EncodedSvg enc;
        enc.id = entry.id;
        enc.category = entry.category;
        for (std::size_t p = 0; p < entry.document.paths.size(); ++p) {
            const SvgPath& path = entry.document.paths[p];
            if (!path.fill || path.commands.empty())
                continue;
            NormalizedPath norm;
            try {
                norm = normalize_path(path.commands);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegeneratePath && e.code() != ErrorCode::EmptyPath)
                    throw;
                log::warn("{}: path {} dropped ({})", entry.id, p, e.what());
                continue;
            }
            const auto id = static_cast<ComponentId>(out.components.size());
            out.components.push_back(make_component(id, std::move(norm.commands), path.fill_rule));
            enc.placements.push_back({id, norm.center.x, norm.center.y, norm.max_dim / kComponentExtent, *path.fill});
        }
        out.encoded.push_back(std::move(enc));
    }
    return out;
}

namespace {

std::string dedup_key(const Component& c)
{
    std::string key = format_path_data(c.commands);
    key += c.fill_rule == FillRule::EvenOdd ? "|evenodd" : "|nonzero";
    return key;
}

} // namespace

DedupResult exact_dedup(std::span<const Component> components)
{
    DedupResult out;
    out.remap.resize(components.size());
    std::unordered_map<std::string, ComponentId> seen;
    for (std::size_t i = 0; i < components.size(); ++i) {
        const std::string key = dedup_key(components[i]);
        auto [it, inserted] = seen.try_emplace(key, static_cast<ComponentId>(out.components.size()));
        if (inserted) {
            Component c = components[i];
            c.id = it->second;
            out.components.push_back(std::move(c));
        }
        out.remap[i] = it->second;
    }
    return out;
}

std::vector<EncodedSvg> remap_corpus(std::span<const EncodedSvg> encoded, std::span<const ComponentId> remap)
{
    std::vector<EncodedSvg> out(encoded.begin(), encoded.end());
    for (auto& e : out) {
        for (auto& p : e.placements) {
            if (p.component_id < 0 || static_cast<std::size_t>(p.component_id) >= remap.size())
                throw Error(ErrorCode::UnknownComponent, fmt::format("component {}", p.component_id));
            p.component_id = remap[p.component_id];
        }
    }
    return out;
}

double jaccard(const Component& a, const Component& b)
{
    const std::size_t uni = union_count(a.mask, b.mask);
    if (uni == 0)
        return 1.0;
    return static_cast<double>(intersection_count(a.mask, b.mask)) / static_cast<double>(uni);
}

std::vector<CandidatePair> candidate_pairs(std::span<const Component> components, double threshold,
                                           unsigned threads, PairStats* stats)
{
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw Error(ErrorCode::InvalidArgument, fmt::format("threshold {} outside (0, 1]", threshold));
    const std::size_t n = components.size();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));

    struct Local {
        std::vector<CandidatePair> pairs;
        PairStats stats;
    };
    std::vector<Local> locals(threads);

    // Row i is handled by worker i % threads; the final sort makes the result order-independent.
    auto work = [&](unsigned worker) {
        Local& local = locals[worker];
        for (std::size_t i = worker; i < n; i += threads) {
            const Component& a = components[i];
            for (std::size_t j = i + 1; j < n; ++j) {
                const Component& b = components[j];
                ++local.stats.considered;
                // J(A,B) <= min(|A|,|B|) / max(|A|,|B|)
                const double lo = static_cast<double>(std::min(a.area, b.area));
                const double hi = static_cast<double>(std::max(a.area, b.area));
                if (hi > 0.0 && lo / hi < threshold) {
                    ++local.stats.pruned;
                    continue;
                }
                const double s = jaccard(a, b);
                if (s >= threshold)
                    local.pairs.push_back({static_cast<ComponentId>(i), static_cast<ComponentId>(j), s});
            }
        }
    };

    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(work, t);
        for (auto& th : pool)
            th.join();
    }

    std::vector<CandidatePair> out;
    PairStats total;
    for (auto& l : locals) {
        out.insert(out.end(), l.pairs.begin(), l.pairs.end());
        total.considered += l.stats.considered;
        total.pruned += l.stats.pruned;
    }
    std::sort(out.begin(), out.end(), [](const CandidatePair& x, const CandidatePair& y) {
        if (x.similarity != y.similarity)
            return x.similarity > y.similarity;
        if (x.i != y.i)
            return x.i < y.i;
        return x.j < y.j;
    });
    if (stats)
        *stats = total;
    return out;
}

Library merge_union_find(std::vector<Component> components, std::span<const CandidatePair> pairs, double threshold)
{
    Library lib;
    lib.threshold = threshold;
    UnionFind uf(components.size());
    for (const auto& p : pairs) {
        if (p.similarity < threshold)
            continue;
        const ComponentId ri = uf.find(p.i);
        const ComponentId rj = uf.find(p.j);
        if (ri == rj)
            continue;
        const ComponentId root = uf.unite(ri, rj);
        lib.merge_log.push_back({root == ri ? rj : ri, root, p.similarity});
    }
    lib.parent.resize(components.size());
    for (std::size_t i = 0; i < components.size(); ++i)
        lib.parent[i] = uf.find(static_cast<ComponentId>(i));
    lib.components = std::move(components);
    return lib;
}

std::vector<EncodedSvg> canonicalize_corpus(std::span<const EncodedSvg> encoded, const Library& library)
{
    std::vector<EncodedSvg> out(encoded.begin(), encoded.end());
    for (auto& e : out) {
        for (auto& p : e.placements)
            p.component_id = library.find(p.component_id);
    }
    return out;
}

SvgPath recover_component(const PlacedComponent& placement, const Library& library)
{
    if (!library.is_root(placement.component_id))
        throw Error(ErrorCode::NonRootComponent, fmt::format("component {}", placement.component_id));
    const Component& c = library.components[placement.component_id];
    const AffineTransform t = AffineTransform::translate(placement.offset_x, placement.offset_y) *
                              AffineTransform::scale(placement.scale);
    SvgPath path;
    path.commands = apply_affine(t, c.commands);
    path.fill = placement.color;
    path.fill_rule = c.fill_rule;
    return path;
}

namespace {

constexpr std::string_view kLibraryMagic = "svgforge-library";
constexpr std::string_view kLibraryVersion = "v1";

// Shortest round-trip formatting, so reloaded geometry is bit-identical.
std::string exact_path_data(std::span<const PathCommand> commands)
{
    std::string out;
    auto pt = [&](Point p) { out += fmt::format("{} {}", p.x, p.y); };
    for (const auto& cmd : commands) {
        switch (cmd.kind) {
        case CommandKind::MoveTo:
            out += 'M';
            pt(cmd.pts[0]);
            break;
        case CommandKind::LineTo:
            out += 'L';
            pt(cmd.pts[0]);
            break;
        case CommandKind::CubicTo:
            out += 'C';
            pt(cmd.pts[0]);
            out += ' ';
            pt(cmd.pts[1]);
            out += ' ';
            pt(cmd.pts[2]);
            break;
        case CommandKind::ClosePath: out += 'Z'; break;
        }
    }
    return out;
}

[[noreturn]] void format_error(std::size_t line, std::string_view what)
{
    throw Error(ErrorCode::FormatVersionMismatch, fmt::format("library line {}: {}", line, what));
}

} // namespace

std::string library_to_string(const Library& lib)
{
    const Bbox vp = component_viewport();
    std::string out = fmt::format("{} {} components={} threshold={} viewport={},{},{},{}\n", kLibraryMagic,
                                  kLibraryVersion, lib.components.size(), lib.threshold, vp.min_x, vp.min_y,
                                  vp.max_x, vp.max_y);
    for (const auto& c : lib.components) {
        out += fmt::format("{}|{}|{}", c.id, exact_path_data(c.commands), c.area);
        if (c.fill_rule == FillRule::EvenOdd)
            out += "|evenodd";
        out += '\n';
    }
    for (const auto& m : lib.merge_log)
        out += fmt::format("parent {} {} {}\n", m.child, m.root, m.similarity);
    return out;
}

Library library_from_string(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        format_error(1, "missing header");
    std::istringstream header(line);
    std::string magic, version, components_field, threshold_field;
    header >> magic >> version >> components_field >> threshold_field;
    if (magic != kLibraryMagic || version != kLibraryVersion)
        format_error(1, fmt::format("expected '{} {}', found '{} {}'", kLibraryMagic, kLibraryVersion, magic, version));
    if (!components_field.starts_with("components=") || !threshold_field.starts_with("threshold="))
        format_error(1, "malformed header fields");

    Library lib;
    std::size_t count = 0;
    try {
        count = std::stoul(components_field.substr(11));
        lib.threshold = std::stod(threshold_field.substr(10));
    } catch (const std::exception&) {
        format_error(1, "malformed header numbers");
    }

    std::size_t line_no = 1;
    for (std::size_t i = 0; i < count; ++i) {
        ++line_no;
        if (!std::getline(in, line))
            format_error(line_no, "truncated component list");
        const std::size_t bar1 = line.find('|');
        const std::size_t bar2 = bar1 == std::string::npos ? bar1 : line.find('|', bar1 + 1);
        if (bar2 == std::string::npos)
            format_error(line_no, "expected id|d|area");
        const std::size_t bar3 = line.find('|', bar2 + 1);
        long id = -1;
        std::size_t area = 0;
        try {
            id = std::stol(line.substr(0, bar1));
            area = std::stoul(line.substr(bar2 + 1, bar3 == std::string::npos ? std::string::npos : bar3 - bar2 - 1));
        } catch (const std::exception&) {
            format_error(line_no, "malformed numbers");
        }
        if (id != static_cast<long>(i))
            format_error(line_no, "component ids must be dense and ordered");
        FillRule rule = FillRule::NonZero;
        if (bar3 != std::string::npos) {
            if (line.substr(bar3 + 1) != "evenodd")
                format_error(line_no, "unknown fill rule");
            rule = FillRule::EvenOdd;
        }
        CommandList commands;
        try {
            commands = parse_path_data(line.substr(bar1 + 1, bar2 - bar1 - 1));
        } catch (const Error& e) {
            format_error(line_no, e.what());
        }
        Component c = make_component(static_cast<ComponentId>(i), std::move(commands), rule);
        if (c.area != area)
            format_error(line_no, fmt::format("area {} does not match rasterized area {}", area, c.area));
        lib.components.push_back(std::move(c));
    }

    UnionFind uf(count);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::istringstream rec(line);
        std::string tag;
        MergeRecord m;
        if (!(rec >> tag >> m.child >> m.root >> m.similarity) || tag != "parent")
            format_error(line_no, "expected 'parent <child> <root> <similarity>'");
        if (m.child < 0 || m.root < 0 || static_cast<std::size_t>(m.child) >= count ||
            static_cast<std::size_t>(m.root) >= count)
            format_error(line_no, "merge record references unknown component");
        if (uf.find(m.child) != m.child || uf.find(m.root) != m.root || uf.unite(m.child, m.root) != m.root)
            format_error(line_no, "merge record inconsistent with union-by-size replay");
        lib.merge_log.push_back(m);
    }
    lib.parent.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        lib.parent[i] = uf.find(static_cast<ComponentId>(i));
    return lib;
}

void save_library(const Library& library, const std::filesystem::path& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::IoError, fmt::format("cannot open '{}' for writing", path.string()));
    f << library_to_string(library);
    if (!f)
        throw Error(ErrorCode::IoError, fmt::format("write to '{}' failed", path.string()));
}

Library load_library(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << f.rdbuf();
    return library_from_string(ss.str());
}

LibraryBuild build_library(std::span<const CorpusDocument> corpus, double threshold, unsigned threads)
{
    LibraryBuild out;
    Extraction ex = extract_components(corpus);
    out.counts.raw = ex.components.size();
    DedupResult dd = exact_dedup(ex.components);
    out.counts.after_exact = dd.components.size();
    const auto encoded = remap_corpus(ex.encoded, dd.remap);
    const auto pairs = candidate_pairs(dd.components, threshold, threads);
    out.counts.candidate_pairs = pairs.size();
    out.library = merge_union_find(std::move(dd.components), pairs, threshold);
    out.counts.after_merge = out.library.roots().size();
    out.corpus = canonicalize_corpus(encoded, out.library);
    return out;
}

EncodedSvg encode_against(const CorpusDocument& doc, const Library& library)
{
    const auto roots = library.roots();
    if (roots.empty())
        throw Error(ErrorCode::EmptyLibrary, "library has no components");
    Extraction ex = extract_components(std::span<const CorpusDocument>(&doc, 1));
    EncodedSvg enc = std::move(ex.encoded.front());
    for (auto& p : enc.placements) {
        const Component& c = ex.components[p.component_id];
        ComponentId best = roots.front();
        double best_sim = -1.0;
        for (ComponentId r : roots) {
            const double sim = jaccard(c, library.components[r]);
            if (sim > best_sim) {
                best_sim = sim;
                best = r;
            }
        }
        p.component_id = best;
    }
    return enc;
}

} // namespace svgforge

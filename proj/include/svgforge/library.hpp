#pragma once

#include "svgforge/geometry.hpp"
#include "svgforge/raster.hpp"
#include "svgforge/svg.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace svgforge {

inline constexpr double kDefaultSimilarityThreshold = 0.92;
inline constexpr int kComponentMaskSize = 100;
inline constexpr double kComponentExtent = 100.0; // longest dimension after normalization

/// Mask viewport for normalized components: [-50, 50]^2.
Bbox component_viewport();

using ComponentId = std::int32_t;

struct Component {
    ComponentId id = 0;
    CommandList commands; // bbox centered at the origin, longest side 100
    FillRule fill_rule = FillRule::NonZero;
    MaskBitmap mask;      // 100x100 over component_viewport()
    std::size_t area = 0; // cached mask_area(mask)
};

/// Builds the component record: rasterizes the mask and caches its area.
Component make_component(ComponentId id, CommandList normalized, FillRule rule = FillRule::NonZero);

struct PlacedComponent {
    ComponentId component_id = 0;
    double offset_x = 0.0; // placed bbox center, canvas units
    double offset_y = 0.0;
    double scale = 1.0; // placed longest side = 100 * scale
    RgbColor color;

    friend bool operator==(const PlacedComponent&, const PlacedComponent&) = default;
};

struct EncodedSvg {
    std::string id;
    std::string category;
    std::vector<PlacedComponent> placements; // paint order

    friend bool operator==(const EncodedSvg&, const EncodedSvg&) = default;
};

struct MergeRecord {
    ComponentId child = 0; // root absorbed by the union
    ComponentId root = 0;
    double similarity = 0.0;

    friend bool operator==(const MergeRecord&, const MergeRecord&) = default;
};

/// Disjoint-set forest with union by set size; equal sizes keep the lower id as root.
class UnionFind {
public:
    explicit UnionFind(std::size_t n);

    ComponentId find(ComponentId x);
    // Returns the surviving root, or -1 when x and y were already joined.
    ComponentId unite(ComponentId x, ComponentId y);
    std::size_t set_size(ComponentId x) { return size_[find(x)]; }

private:
    std::vector<ComponentId> parent_;
    std::vector<std::size_t> size_;
};

struct Library {
    std::vector<Component> components; // components[i].id == i
    std::vector<ComponentId> parent;   // parent[i] is the root of i's set
    std::vector<MergeRecord> merge_log;
    double threshold = kDefaultSimilarityThreshold;

    ComponentId find(ComponentId id) const;
    bool is_root(ComponentId id) const;
    std::vector<ComponentId> roots() const;
    std::size_t size() const { return components.size(); }
};

struct NormalizedPath {
    CommandList commands;
    Point center;
    double max_dim = 0.0;
};

/// Centers the bbox at the origin and scales the longest side to 100.
/// Throws DegeneratePath when the longest side is below 1e-6.
NormalizedPath normalize_path(std::span<const PathCommand> commands);

struct CorpusDocument {
    std::string id;
    std::string category;
    SvgDocument document;
};

struct Extraction {
    std::vector<Component> components; // one per filled path, ids dense in extraction order
    std::vector<EncodedSvg> encoded;
};

Extraction extract_components(std::span<const CorpusDocument> corpus);

struct DedupResult {
    std::vector<Component> components; // renumbered densely, in order of first occurrence
    std::vector<ComponentId> remap;     // old id -> new id
};

/// Collapses components whose canonical command text (3 decimals) and fill rule match.
DedupResult exact_dedup(std::span<const Component> components);

/// Rewrites placement ids through `remap`.
std::vector<EncodedSvg> remap_corpus(std::span<const EncodedSvg> encoded, std::span<const ComponentId> remap);

double jaccard(const Component& a, const Component& b);

struct CandidatePair {
    ComponentId i = 0;
    ComponentId j = 0;
    double similarity = 0.0;

    friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

struct PairStats {
    std::size_t considered = 0;
    std::size_t pruned = 0;
};

/// Every pair (i < j) with jaccard >= threshold, sorted by similarity descending then (i, j).
/// Pairs whose area ratio min/max is below the threshold are skipped without a popcount.
std::vector<CandidatePair> candidate_pairs(std::span<const Component> components, double threshold,
                                           unsigned threads = 1, PairStats* stats = nullptr);

Library merge_union_find(std::vector<Component> components, std::span<const CandidatePair> pairs,
                         double threshold);

/// Replaces each placement's component id with its root. Throws UnknownComponent.
std::vector<EncodedSvg> canonicalize_corpus(std::span<const EncodedSvg> encoded, const Library& library);

/// Throws UnknownComponent or NonRootComponent.
SvgPath recover_component(const PlacedComponent& placement, const Library& library);

void save_library(const Library& library, const std::filesystem::path& path);
Library load_library(const std::filesystem::path& path);
std::string library_to_string(const Library& library);
Library library_from_string(const std::string& text);

struct StageCounts {
    std::size_t raw = 0;
    std::size_t after_exact = 0;
    std::size_t candidate_pairs = 0;
    std::size_t after_merge = 0;
};

struct LibraryBuild {
    Library library;
    std::vector<EncodedSvg> corpus; // canonical
    StageCounts counts;
};

/// extract -> exact_dedup -> candidate_pairs -> merge_union_find -> canonicalize.
LibraryBuild build_library(std::span<const CorpusDocument> corpus, double threshold = kDefaultSimilarityThreshold,
                           unsigned threads = 1);

/// Places each filled path of `doc` on the root with the highest Jaccard similarity
/// (ties: lower id). Throws EmptyLibrary when the library has no components.
EncodedSvg encode_against(const CorpusDocument& doc, const Library& library);

} // namespace svgforge

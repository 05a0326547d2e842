#pragma once

#include "svgforge/svg.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace svgforge {

struct ManifestRecord {
    std::string id;
    std::string category;
    std::string relative_path;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// Lines of `id<TAB>category<TAB>relative_path`; blank lines are ignored.
/// Throws InvalidArgument on malformed lines or duplicate ids.
std::vector<ManifestRecord> parse_manifest(std::string_view text);
std::string format_manifest(std::span<const ManifestRecord> records);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(std::span<const ManifestRecord> records, const std::filesystem::path& path);

struct CorpusEntry {
    std::string id;
    std::string category;
    SvgDocument document;
    std::filesystem::path source_path;
};

/// Parses every file listed in the manifest (paths relative to the manifest's directory).
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& manifest);

enum class Verdict { Kept, NoFillAttr, BlackWhiteOnly, BlackDominant, ParseError, Degenerate, Duplicate };

std::string_view to_string(Verdict v);

inline constexpr int kCleanRasterSize = 100;

/// Sequential checks: no fill attribute anywhere, then a 100x100 render that is only black and
/// white, then black pixels outnumbering the other non-white pixels.
Verdict detect_colorless(const SvgDocument& doc);

struct CleanEntry {
    std::string id;
    Verdict verdict = Verdict::Kept;
    std::string detail;
};

struct CleanReport {
    std::vector<CleanEntry> entries;

    std::size_t kept() const;
    std::size_t removed() const { return entries.size() - kept(); }
    std::size_t count(Verdict v) const;
    /// `id,verdict,reason` with verdict kept|removed.
    std::string to_csv() const;
};

/// Maps the content bounding box uniformly into [0,100]^2, centered on the shorter axis,
/// and sets the viewbox to 0 0 100 100. Throws EmptyDocument.
SvgDocument normalize_viewbox(const SvgDocument& doc);

/// Keeps the first of each group of entries with identical serialized documents.
std::vector<CorpusEntry> dedup_entries(std::span<const CorpusEntry> entries);
/// Indices of entries that duplicate an earlier one.
std::vector<std::size_t> duplicate_indices(std::span<const CorpusEntry> entries);

struct CleanResult {
    std::vector<CorpusEntry> kept; // normalized
    CleanReport report;
};

/// Colorless detection, viewbox normalization and duplicate removal over loaded entries.
/// `failures` carries entries that could not be loaded (ParseError) and is merged into the report.
CleanResult clean_corpus(std::vector<CorpusEntry> entries, std::span<const CleanEntry> failures = {});

struct SplitRatios {
    double train = 0.90;
    double validation = 0.08;
    double test = 0.02;
};

struct SplitIndices {
    std::vector<std::size_t> train, validation, test;
};

/// Per category (in sorted order): seeded shuffle, floor allocation, then leftover entries to the
/// splits with the largest fractional parts (ties: train, validation, test).
SplitIndices stratified_split(std::span<const std::string> categories, SplitRatios ratios, std::uint64_t seed);
std::array<std::size_t, 3> split_counts(std::size_t n, SplitRatios ratios);

struct CategoryStats {
    std::string category;
    std::size_t count = 0;
    double mean_paths = 0.0;
};

struct CorpusStats {
    std::vector<CategoryStats> categories; // count descending, then name
    std::size_t total = 0;
    std::size_t min_paths = 0;
    std::size_t max_paths = 0;
    double mean_paths = 0.0;

    std::string to_string() const;
};

CorpusStats corpus_stats(std::span<const CorpusEntry> entries);

struct SynthSpec {
    std::vector<std::string> categories;
    std::size_t total = 0; // must be a positive multiple of categories.size()
    std::size_t min_paths = 2;
    std::size_t max_paths = 40;
};

/// Deterministic synthetic corpus built from a fixed set of primitive shapes. Throws InvalidSpec.
std::vector<CorpusEntry> synth_corpus(const SynthSpec& spec, std::uint64_t seed);

} // namespace svgforge

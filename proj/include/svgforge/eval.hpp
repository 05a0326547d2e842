#pragma once

#include "svgforge/library.hpp"
#include "svgforge/model.hpp"
#include "svgforge/tokens.hpp"

#include <array>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace svgforge {

/// Exact token tuple. Throws GrammarViolation for invalid sequences.
using CanonicalKey = TokenSequence;
CanonicalKey canonical_key(const TokenSequence& t, const Vocabulary& vocab);

/// Fraction of items whose key occurs exactly once. Throws EmptyInput.
double uniqueness(std::span<const TokenSequence> generated);
/// Fraction of items whose key is absent from `training`. Throws EmptyInput.
double novelty(std::span<const TokenSequence> generated, const std::set<TokenSequence>& training);

/// Stable ascending sort by path count, then rank quartiles; leftover items go to the
/// earlier buckets. Returns input indices per bucket. Throws EmptyInput.
std::array<std::vector<std::size_t>, 4> complexity_buckets(std::span<const std::size_t> path_counts);

struct TimingStats {
    std::vector<double> samples; // seconds per SVG
    double mean = 0.0;
    double median = 0.0;
    double p95 = 0.0;

    static TimingStats from_samples(std::vector<double> samples);
    std::string to_csv() const;
};

struct HarnessOutput {
    std::vector<std::string> categories; // category of item i
    std::vector<TokenSequence> sequences;
    std::vector<std::string> svgs;
    TimingStats timing;
};

/// n end-to-end generations (generate, decode, serialize), cycling through `categories`;
/// item i uses seed + i. One warm-up run precedes the timed ones. Throws InvalidArgument for n = 0.
HarnessOutput timing_harness(const Parameters& params, const Vocabulary& vocab, const Library& library,
                             std::span<const std::string> categories, std::size_t n, std::uint64_t seed,
                             const SamplerConfig& sampler, std::size_t max_components);

struct EvalReport {
    std::size_t generated = 0;
    std::size_t training = 0;
    double uniqueness = 0.0;
    double novelty = 0.0;
    std::array<std::size_t, 4> bucket_sizes{};
    std::array<std::size_t, 4> bucket_max_paths{};
    std::optional<TimingStats> timing;

    /// Flat key=value lines.
    std::string to_string() const;
};

EvalReport evaluate(std::span<const TokenSequence> generated, std::span<const TokenSequence> training,
                    const Vocabulary& vocab);

} // namespace svgforge

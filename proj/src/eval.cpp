#include "svgforge/eval.hpp"
#include "svgforge/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <numeric>

namespace svgforge {

CanonicalKey canonical_key(const TokenSequence& t, const Vocabulary& vocab)
{
    const Validation v = validate_sequence(t, vocab);
    if (!v.ok())
        throw Error(ErrorCode::GrammarViolation, fmt::format("invalid sequence at position {}", v.violation->position));
    return t;
}

double uniqueness(std::span<const TokenSequence> generated)
{
    if (generated.empty())
        throw Error(ErrorCode::EmptyInput, "uniqueness of an empty sample");
    std::map<TokenSequence, std::size_t> counts;
    for (const auto& g : generated)
        ++counts[g];
    std::size_t once = 0;
    for (const auto& g : generated)
        once += counts[g] == 1 ? 1 : 0;
    return static_cast<double>(once) / static_cast<double>(generated.size());
}

double novelty(std::span<const TokenSequence> generated, const std::set<TokenSequence>& training)
{
    if (generated.empty())
        throw Error(ErrorCode::EmptyInput, "novelty of an empty sample");
    std::size_t fresh = 0;
    for (const auto& g : generated)
        fresh += training.contains(g) ? 0 : 1;
    return static_cast<double>(fresh) / static_cast<double>(generated.size());
}

std::array<std::vector<std::size_t>, 4> complexity_buckets(std::span<const std::size_t> path_counts)
{
    if (path_counts.empty())
        throw Error(ErrorCode::EmptyInput, "no items to bucket");
    std::vector<std::size_t> order(path_counts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return path_counts[a] < path_counts[b]; });
    const std::size_t n = order.size();
    std::array<std::vector<std::size_t>, 4> out;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < 4; ++b) {
        const std::size_t size = n / 4 + (b < n % 4 ? 1 : 0);
        out[b].assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return out;
}

TimingStats TimingStats::from_samples(std::vector<double> samples)
{
    TimingStats s;
    s.samples = std::move(samples);
    if (s.samples.empty())
        return s;
    const std::size_t n = s.samples.size();
    s.mean = std::accumulate(s.samples.begin(), s.samples.end(), 0.0) / static_cast<double>(n);
    std::vector<double> sorted = s.samples;
    std::sort(sorted.begin(), sorted.end());
    s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    // nearest rank
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    s.p95 = sorted[std::max<std::size_t>(rank, 1) - 1];
    return s;
}

std::string TimingStats::to_csv() const
{
    std::string out = "index,seconds\n";
    for (std::size_t i = 0; i < samples.size(); ++i)
        out += fmt::format("{},{:.9f}\n", i, samples[i]);
    return out;
}

HarnessOutput timing_harness(const Parameters& params, const Vocabulary& vocab, const Library& library,
                             std::span<const std::string> categories, std::size_t n, std::uint64_t seed,
                             const SamplerConfig& sampler, std::size_t max_components)
{
    if (n == 0)
        throw Error(ErrorCode::InvalidArgument, "timing harness needs n > 0");
    if (categories.empty())
        throw Error(ErrorCode::InvalidArgument, "timing harness needs at least one category");
    using clock = std::chrono::steady_clock;

    auto run_one = [&](const std::string& category, std::uint64_t s, HarnessOutput* sink) {
        const auto t0 = clock::now();
        TokenSequence seq = generate(params, vocab, category, sampler, s, max_components);
        std::string svg = serialize_svg(decode_tokens(seq, vocab, library));
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        if (sink) {
            sink->categories.push_back(category);
            sink->sequences.push_back(std::move(seq));
            sink->svgs.push_back(std::move(svg));
        }
        return secs;
    };

    HarnessOutput out;
    run_one(categories[0], seed ^ 0x9e3779b97f4a7c15ull, nullptr); // warm-up
    std::vector<double> samples;
    for (std::size_t i = 0; i < n; ++i)
        samples.push_back(run_one(categories[i % categories.size()], seed + i, &out));
    out.timing = TimingStats::from_samples(std::move(samples));
    return out;
}

std::string EvalReport::to_string() const
{
    std::string out;
    out += fmt::format("generated={}\n", generated);
    out += fmt::format("training={}\n", training);
    out += fmt::format("uniqueness={:.6f}\n", uniqueness);
    out += fmt::format("novelty={:.6f}\n", novelty);
    for (std::size_t b = 0; b < 4; ++b) {
        out += fmt::format("bucket{}.size={}\n", b, bucket_sizes[b]);
        out += fmt::format("bucket{}.max_paths={}\n", b, bucket_max_paths[b]);
    }
    if (timing) {
        out += fmt::format("timing.n={}\n", timing->samples.size());
        out += fmt::format("timing.mean_s={:.9f}\n", timing->mean);
        out += fmt::format("timing.median_s={:.9f}\n", timing->median);
        out += fmt::format("timing.p95_s={:.9f}\n", timing->p95);
    }
    return out;
}

EvalReport evaluate(std::span<const TokenSequence> generated, std::span<const TokenSequence> training,
                    const Vocabulary& vocab)
{
    EvalReport r;
    std::vector<std::size_t> paths;
    for (const auto& g : generated) {
        canonical_key(g, vocab);
        // BOS, category, groups, EOS
        paths.push_back((g.size() - 3) / kGroupSize);
    }
    std::set<TokenSequence> train_keys(training.begin(), training.end());
    r.generated = generated.size();
    r.training = train_keys.size();
    r.uniqueness = uniqueness(generated);
    r.novelty = novelty(generated, train_keys);
    const auto buckets = complexity_buckets(paths);
    for (std::size_t b = 0; b < 4; ++b) {
        r.bucket_sizes[b] = buckets[b].size();
        for (std::size_t i : buckets[b])
            r.bucket_max_paths[b] = std::max(r.bucket_max_paths[b], paths[i]);
    }
    return r;
}

} // namespace svgforge

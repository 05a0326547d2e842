// svgforge command line driver.

#include "svgforge/dataset.hpp"
#include "svgforge/error.hpp"
#include "svgforge/eval.hpp"
#include "svgforge/io.hpp"
#include "svgforge/library.hpp"
#include "svgforge/log.hpp"
#include "svgforge/model.hpp"
#include "svgforge/raster.hpp"
#include "svgforge/tokens.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>

namespace fs = std::filesystem;
using namespace svgforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitFormat = 3;
constexpr int kExitTraining = 4;
constexpr int kExitUsage = 5;

// Error carrying an explicit exit code.
struct ExitError : std::runtime_error {
    ExitError(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
    int code;
};

int exit_code_for(ErrorCode c)
{
    switch (c) {
    case ErrorCode::IoError:
        return kExitIo;
    case ErrorCode::SequenceTooLong:
    case ErrorCode::InvalidConfig:
        return kExitTraining;
    case ErrorCode::UnknownCategory:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidSpec:
    case ErrorCode::EmptyInput:
        return kExitUsage;
    default:
        return kExitFormat;
    }
}

void require_file(const fs::path& p, std::string_view what)
{
    if (!fs::is_regular_file(p))
        throw Error(ErrorCode::IoError, fmt::format("{} '{}' not found", what, p.string()));
}

std::string run_header(std::string_view command, std::vector<std::pair<std::string, std::string>> fields)
{
    std::string out = fmt::format("command={}\n", command);
    for (auto& [k, v] : fields)
        out += fmt::format("{}={}\n", k, v);
    return out;
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string::npos ? s.size() : comma;
        if (end > start)
            out.push_back(s.substr(start, end - start));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

std::string describe(const GrammarViolation& v)
{
    return fmt::format("grammar violation at position {}: found {}, expected {}", v.position,
                       v.found ? std::string(to_string(*v.found)) : std::string("end of sequence"),
                       to_string(v.expected));
}

// ------------------------------------------------------------------ subcommands

struct SynthArgs {
    std::string out;
    std::string categories = "icons,animals,food,travel,weather,sports,tools,plants,music,people";
    std::size_t total = 500;
    std::size_t min_paths = 2;
    std::size_t max_paths = 40;
    std::uint64_t seed = 7;
};

int run_synth(const SynthArgs& a)
{
    SynthSpec spec{split_list(a.categories), a.total, a.min_paths, a.max_paths};
    const auto corpus = synth_corpus(spec, a.seed);
    StagedDirectory stage(a.out);
    fs::create_directories(stage.path("svg"));
    std::vector<ManifestRecord> manifest;
    for (const auto& e : corpus) {
        const std::string rel = fmt::format("svg/{}.svg", e.id);
        write_text_file(stage.path(rel), serialize_svg(e.document));
        manifest.push_back({e.id, e.category, rel});
    }
    write_manifest(manifest, stage.path("manifest.tsv"));
    write_text_file(stage.path("run.txt"),
                    run_header("synth", {{"seed", std::to_string(a.seed)}, {"total", std::to_string(a.total)},
                                         {"categories", a.categories}}));
    stage.commit();
    fmt::print("synth: {} entries over {} categories (seed {})\n", corpus.size(), spec.categories.size(), a.seed);
    return kExitOk;
}

struct CleanArgs {
    std::string manifest;
    std::string out;
};

int run_clean(const CleanArgs& a)
{
    require_file(a.manifest, "manifest");
    const auto records = read_manifest(a.manifest);
    const fs::path base = fs::path(a.manifest).parent_path();
    std::vector<CorpusEntry> entries;
    std::vector<CleanEntry> failures;
    for (const auto& r : records) {
        try {
            const fs::path p = base / r.relative_path;
            entries.push_back({r.id, r.category, parse_svg(read_text_file(p)), p});
        } catch (const Error& e) {
            log::warn("{}: {}", r.id, e.what());
            failures.push_back({r.id, Verdict::ParseError, e.what()});
        }
    }
    const CleanResult result = clean_corpus(std::move(entries), failures);

    StagedDirectory stage(a.out);
    fs::create_directories(stage.path("svg"));
    std::vector<ManifestRecord> kept;
    for (const auto& e : result.kept) {
        const std::string rel = fmt::format("svg/{}.svg", e.id);
        write_text_file(stage.path(rel), serialize_svg(e.document));
        kept.push_back({e.id, e.category, rel});
    }
    write_manifest(kept, stage.path("manifest.tsv"));
    write_text_file(stage.path("clean_report.csv"), result.report.to_csv());
    stage.commit();
    fmt::print("clean: {} kept, {} removed\n", result.report.kept(), result.report.removed());
    for (Verdict v : {Verdict::NoFillAttr, Verdict::BlackWhiteOnly, Verdict::BlackDominant, Verdict::ParseError,
                      Verdict::Degenerate, Verdict::Duplicate}) {
        if (const auto n = result.report.count(v))
            fmt::print("  {}: {}\n", to_string(v), n);
    }
    return kExitOk;
}

struct SplitArgs {
    std::string manifest;
    std::string out;
    std::uint64_t seed = 0;
    double train = 0.90, validation = 0.08, test = 0.02;
};

int run_split(const SplitArgs& a)
{
    require_file(a.manifest, "manifest");
    auto records = read_manifest(a.manifest);
    std::vector<std::string> cats;
    for (const auto& r : records)
        cats.push_back(r.category);
    const auto split = stratified_split(cats, {a.train, a.validation, a.test}, a.seed);

    StagedDirectory stage(a.out);
    // Paths in the new manifests are made relative to the output directory.
    const fs::path src_base = fs::absolute(fs::path(a.manifest)).parent_path();
    const fs::path dst_base = fs::absolute(fs::path(a.out));
    auto emit = [&](const std::vector<std::size_t>& idx, const char* name) {
        std::vector<ManifestRecord> out;
        for (std::size_t i : idx) {
            ManifestRecord r = records[i];
            r.relative_path = fs::relative(src_base / r.relative_path, dst_base).generic_string();
            out.push_back(std::move(r));
        }
        write_manifest(out, stage.path(name));
    };
    emit(split.train, "train.tsv");
    emit(split.validation, "validation.tsv");
    emit(split.test, "test.tsv");
    write_text_file(stage.path("run.txt"), run_header("split", {{"seed", std::to_string(a.seed)}}));
    stage.commit();
    fmt::print("split: train={} validation={} test={} (seed {})\n", split.train.size(), split.validation.size(),
               split.test.size(), a.seed);
    return kExitOk;
}

struct StatsArgs {
    std::string manifest;
    std::string out;
};

int run_stats(const StatsArgs& a)
{
    require_file(a.manifest, "manifest");
    const auto corpus = load_corpus(a.manifest);
    const std::string report = corpus_stats(corpus).to_string();
    if (a.out.empty())
        fmt::print("{}", report);
    else
        write_text_file(a.out, report);
    return kExitOk;
}

struct BuildArgs {
    std::string manifest;
    std::string out;
    double threshold = kDefaultSimilarityThreshold;
    unsigned threads = 1;
};

int run_build_library(const BuildArgs& a)
{
    require_file(a.manifest, "manifest");
    const auto entries = load_corpus(a.manifest);
    std::vector<CorpusDocument> docs;
    std::set<std::string> categories;
    for (const auto& e : entries) {
        docs.push_back({e.id, e.category, e.document});
        categories.insert(e.category);
    }
    const LibraryBuild build = build_library(docs, a.threshold, a.threads);
    const Vocabulary vocab = build_vocabulary(build.library, {categories.begin(), categories.end()});
    TokenFile tokens{vocab.size(), {}};
    for (const auto& e : build.corpus)
        tokens.sequences.push_back(encode_svg(e, vocab));

    StagedDirectory stage(a.out);
    save_library(build.library, stage.path("library.txt"));
    save_vocabulary(vocab, stage.path("vocab.txt"));
    save_tokens(tokens, stage.path("corpus.tokens"));
    write_text_file(stage.path("run.txt"),
                    run_header("build-library", {{"threshold", fmt::format("{}", a.threshold)},
                                                 {"threads", std::to_string(a.threads)}}));
    stage.commit();
    const auto& c = build.counts;
    fmt::print("build-library: raw={} after_exact={} candidate_pairs={} after_merge={}\n", c.raw, c.after_exact,
               c.candidate_pairs, c.after_merge);
    fmt::print("vocabulary: {} tokens ({} categories, {} components)\n", vocab.size(), vocab.category_count(),
               vocab.component_count());
    return kExitOk;
}

struct EncodeArgs {
    std::string manifest;
    std::string library;
    std::string vocab;
    std::string out;
};

int run_encode(const EncodeArgs& a)
{
    require_file(a.manifest, "manifest");
    require_file(a.library, "library");
    require_file(a.vocab, "vocabulary");
    const Library library = load_library(a.library);
    const Vocabulary vocab = load_vocabulary(a.vocab);
    TokenFile tokens{vocab.size(), {}};
    for (const auto& e : load_corpus(a.manifest)) {
        const EncodedSvg enc = encode_against({e.id, e.category, e.document}, library);
        tokens.sequences.push_back(encode_svg(enc, vocab));
    }
    save_tokens(tokens, a.out);
    fmt::print("encode: {} sequences\n", tokens.sequences.size());
    return kExitOk;
}

struct DecodeArgs {
    std::string tokens;
    std::string library;
    std::string vocab;
    std::string out;
    bool preview = false;
    int preview_size = 100;
};

int run_decode(const DecodeArgs& a)
{
    require_file(a.tokens, "token file");
    require_file(a.library, "library");
    require_file(a.vocab, "vocabulary");
    const Library library = load_library(a.library);
    const Vocabulary vocab = load_vocabulary(a.vocab);
    const TokenFile tokens = load_tokens(a.tokens);
    if (tokens.vocab_size != vocab.size())
        throw Error(ErrorCode::VocabularyMismatch,
                    fmt::format("token file vocabulary {} vs {}", tokens.vocab_size, vocab.size()));
    // Validate everything before writing anything.
    for (std::size_t i = 0; i < tokens.sequences.size(); ++i) {
        const Validation v = validate_sequence(tokens.sequences[i], vocab);
        if (!v.ok())
            throw ExitError(kExitFormat, fmt::format("sequence {}: {}", i, describe(*v.violation)));
    }
    StagedDirectory stage(a.out);
    for (std::size_t i = 0; i < tokens.sequences.size(); ++i) {
        const SvgDocument doc = decode_tokens(tokens.sequences[i], vocab, library);
        write_text_file(stage.path(fmt::format("{:06}.svg", i)), serialize_svg(doc));
        if (a.preview)
            write_ppm(rasterize_document(doc, a.preview_size, a.preview_size), stage.path(fmt::format("{:06}.ppm", i)));
    }
    stage.commit();
    fmt::print("decode: {} documents\n", tokens.sequences.size());
    return kExitOk;
}

struct TrainArgs {
    std::string tokens;
    std::string vocab;
    std::string out;
    std::size_t epochs = 50;
    std::size_t batch = 16;
    double lr = 6e-4;
    double weight_decay = 0.01;
    std::uint64_t seed = 0;
    bool strict = false;
    std::size_t max_components = 32;
    std::size_t embed_dim = 64;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t max_steps = 0;
};

int run_train(const TrainArgs& a)
{
    require_file(a.tokens, "token file");
    require_file(a.vocab, "vocabulary");
    const Vocabulary vocab = load_vocabulary(a.vocab);
    const TokenFile tokens = load_tokens(a.tokens);
    if (tokens.vocab_size != vocab.size())
        throw Error(ErrorCode::VocabularyMismatch,
                    fmt::format("token file vocabulary {} vs {}", tokens.vocab_size, vocab.size()));
    for (std::size_t i = 0; i < tokens.sequences.size(); ++i) {
        const Validation v = validate_sequence(tokens.sequences[i], vocab);
        if (!v.ok())
            throw ExitError(kExitTraining, fmt::format("training sequence {}: {}", i, describe(*v.violation)));
    }

    ModelConfig config;
    config.vocab_size = vocab.size();
    config.embed_dim = a.embed_dim;
    config.layers = a.layers;
    config.heads = a.heads;
    config.max_components = a.max_components;
    config.context_length = context_for(a.max_components);
    config.seed = a.seed;
    TrainConfig tc;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch;
    tc.optim.lr = a.lr;
    tc.optim.weight_decay = a.weight_decay;
    tc.seed = a.seed;
    tc.strict = a.strict;
    if (a.max_steps > 0)
        tc.max_steps = a.max_steps;

    StagedDirectory stage(a.out);
    const fs::path ckpt = stage.path("model.ckpt");
    const auto result = train(tokens.sequences, config, tc, [&](const Parameters& p, std::size_t epoch) {
        save_checkpoint({p, tc, vocab.hash()}, ckpt);
        log::info("epoch {} checkpoint written", epoch);
    });
    save_checkpoint({result.params, tc, vocab.hash()}, ckpt);
    write_text_file(stage.path("loss.csv"), loss_csv(result.steps));
    write_text_file(stage.path("run.txt"),
                    run_header("train", {{"seed", std::to_string(a.seed)},
                                         {"epochs", std::to_string(a.epochs)},
                                         {"batch", std::to_string(a.batch)},
                                         {"lr", fmt::format("{}", a.lr)},
                                         {"max_components", std::to_string(a.max_components)},
                                         {"parameters", std::to_string(result.params.count())},
                                         {"skipped", std::to_string(result.skipped)}}));
    stage.commit();
    for (std::size_t e = 0; e < result.epoch_mean_loss.size(); ++e)
        fmt::print("epoch {} mean_loss {:.6f}\n", e, result.epoch_mean_loss[e]);
    fmt::print("train: {} steps, {} parameters, {} skipped (seed {})\n", result.steps.size(), result.params.count(),
               result.skipped, a.seed);
    return kExitOk;
}

struct GenerateArgs {
    std::string checkpoint;
    std::string vocab;
    std::string library;
    std::string out;
    std::vector<std::string> categories;
    std::size_t n = 10;
    std::string sampler = "sample";
    double temperature = 1.0;
    std::size_t top_k = 40;
    std::uint64_t seed = 0;
    std::size_t max_components = 32;
};

int run_generate(const GenerateArgs& a)
{
    require_file(a.checkpoint, "checkpoint");
    require_file(a.vocab, "vocabulary");
    require_file(a.library, "library");
    const Vocabulary vocab = load_vocabulary(a.vocab);
    const Checkpoint ck = load_checkpoint(a.checkpoint, vocab.hash());
    const Library library = load_library(a.library);
    std::vector<std::string> categories = a.categories.empty() ? vocab.categories() : a.categories;
    for (const auto& c : categories) {
        if (!vocab.category_token(c))
            throw ExitError(kExitUsage, fmt::format("unknown category '{}'; known categories: {}", c,
                                                    fmt::join(vocab.categories(), ", ")));
    }
    SamplerConfig sampler;
    if (a.sampler == "greedy")
        sampler = SamplerConfig::greedy();
    else if (a.sampler == "sample")
        sampler = {SamplerConfig::Mode::Sample, a.temperature, a.top_k};
    else
        throw ExitError(kExitUsage, fmt::format("unknown sampler '{}' (greedy|sample)", a.sampler));

    const HarnessOutput out = timing_harness(ck.params, vocab, library, categories, a.n, a.seed, sampler,
                                             a.max_components);
    StagedDirectory stage(a.out);
    fs::create_directories(stage.path("svg"));
    for (std::size_t i = 0; i < out.svgs.size(); ++i)
        write_text_file(stage.path(fmt::format("svg/{:06}.svg", i)), out.svgs[i]);
    save_tokens({vocab.size(), out.sequences}, stage.path("generated.tokens"));
    write_text_file(stage.path("timing.csv"), out.timing.to_csv());
    write_text_file(stage.path("run.txt"),
                    run_header("generate", {{"seed", std::to_string(a.seed)},
                                            {"n", std::to_string(a.n)},
                                            {"sampler", a.sampler},
                                            {"temperature", fmt::format("{}", a.temperature)},
                                            {"top_k", std::to_string(a.top_k)},
                                            {"max_components", std::to_string(a.max_components)},
                                            {"categories", fmt::format("{}", fmt::join(categories, ","))}}));
    stage.commit();
    fmt::print("generate: {} svgs, mean {:.6f}s median {:.6f}s p95 {:.6f}s per svg (seed {})\n", out.svgs.size(),
               out.timing.mean, out.timing.median, out.timing.p95, a.seed);
    return kExitOk;
}

struct EvalArgs {
    std::string generated;
    std::string training;
    std::string vocab;
    std::string timing;
    std::string out;
};

int run_eval(const EvalArgs& a)
{
    require_file(a.generated, "generated token file");
    require_file(a.training, "training token file");
    require_file(a.vocab, "vocabulary");
    const Vocabulary vocab = load_vocabulary(a.vocab);
    const TokenFile gen = load_tokens(a.generated);
    const TokenFile train_tokens = load_tokens(a.training);
    EvalReport report = evaluate(gen.sequences, train_tokens.sequences, vocab);
    if (!a.timing.empty()) {
        require_file(a.timing, "timing CSV");
        std::vector<double> samples;
        const std::string text = read_text_file(a.timing);
        std::size_t pos = text.find('\n'); // header
        while (pos != std::string::npos && pos + 1 < text.size()) {
            const auto next = text.find('\n', pos + 1);
            const std::string line = text.substr(pos + 1, next - pos - 1);
            const auto comma = line.find(',');
            if (comma != std::string::npos)
                samples.push_back(std::stod(line.substr(comma + 1)));
            pos = next;
        }
        report.timing = TimingStats::from_samples(std::move(samples));
    }
    const std::string text = report.to_string();
    if (a.out.empty())
        fmt::print("{}", text);
    else
        write_text_file(a.out, text);
    return kExitOk;
}

unsigned threads_default()
{
    if (const char* env = std::getenv("SVGFORGE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return static_cast<unsigned>(n);
    }
    return 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"svgforge: component-based SVG tokenization and generation"};
    app.require_subcommand(1);
    bool verbose = false;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "Log progress messages");
    app.add_flag("-q,--quiet", quiet, "Only log errors");

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Write a deterministic synthetic corpus");
    c_synth->add_option("--out", synth.out, "Output directory")->required();
    c_synth->add_option("--categories", synth.categories, "Comma-separated category names")->capture_default_str();
    c_synth->add_option("--total", synth.total, "Total entries (multiple of the category count)")->capture_default_str();
    c_synth->add_option("--min-paths", synth.min_paths, "Minimum paths per entry")->capture_default_str();
    c_synth->add_option("--max-paths", synth.max_paths, "Maximum paths per entry")->capture_default_str();
    c_synth->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();

    CleanArgs clean;
    auto* c_clean = app.add_subcommand("clean", "Remove colorless and duplicate SVGs, normalize viewboxes");
    c_clean->add_option("--manifest", clean.manifest, "Input manifest")->required();
    c_clean->add_option("--out", clean.out, "Output directory")->required();

    SplitArgs split;
    auto* c_split = app.add_subcommand("split", "Stratified train/validation/test split");
    c_split->add_option("--manifest", split.manifest, "Input manifest")->required();
    c_split->add_option("--out", split.out, "Output directory")->required();
    c_split->add_option("--seed", split.seed, "Shuffle seed")->capture_default_str();
    c_split->add_option("--train", split.train, "Train ratio")->capture_default_str();
    c_split->add_option("--validation", split.validation, "Validation ratio")->capture_default_str();
    c_split->add_option("--test", split.test, "Test ratio")->capture_default_str();

    StatsArgs stats;
    auto* c_stats = app.add_subcommand("stats", "Corpus statistics");
    c_stats->add_option("--manifest", stats.manifest, "Input manifest")->required();
    c_stats->add_option("--out", stats.out, "Report file (default: stdout)");

    BuildArgs build;
    build.threads = threads_default();
    auto* c_build = app.add_subcommand("build-library", "Extract, deduplicate and merge components");
    c_build->add_option("--manifest", build.manifest, "Input manifest")->required();
    c_build->add_option("--out", build.out, "Output directory")->required();
    c_build->add_option("--threshold", build.threshold, "Jaccard merge threshold")->capture_default_str();
    c_build->add_option("--threads", build.threads, "Worker threads (env SVGFORGE_THREADS)")->capture_default_str();

    EncodeArgs encode;
    auto* c_encode = app.add_subcommand("encode", "Encode a manifest against an existing library");
    c_encode->add_option("--manifest", encode.manifest, "Input manifest")->required();
    c_encode->add_option("--library", encode.library, "Library file")->required();
    c_encode->add_option("--vocab", encode.vocab, "Vocabulary file")->required();
    c_encode->add_option("--out", encode.out, "Output token file")->required();

    DecodeArgs decode;
    auto* c_decode = app.add_subcommand("decode", "Decode token sequences to SVG files");
    c_decode->add_option("--tokens", decode.tokens, "Token file")->required();
    c_decode->add_option("--library", decode.library, "Library file")->required();
    c_decode->add_option("--vocab", decode.vocab, "Vocabulary file")->required();
    c_decode->add_option("--out", decode.out, "Output directory")->required();
    c_decode->add_flag("--preview", decode.preview, "Also write a PPM render per SVG");
    c_decode->add_option("--preview-size", decode.preview_size, "Preview resolution")->capture_default_str();

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "Train the decoder on a token file");
    c_train->add_option("--tokens", tr.tokens, "Training token file")->required();
    c_train->add_option("--vocab", tr.vocab, "Vocabulary file")->required();
    c_train->add_option("--out", tr.out, "Output directory")->required();
    c_train->add_option("--epochs", tr.epochs, "Epochs")->capture_default_str();
    c_train->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
    c_train->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
    c_train->add_option("--weight-decay", tr.weight_decay, "AdamW weight decay")->capture_default_str();
    c_train->add_option("--seed", tr.seed, "Init and shuffle seed")->capture_default_str();
    c_train->add_flag("--strict", tr.strict, "Fail on sequences longer than the context");
    c_train->add_option("--max-components", tr.max_components, "Component groups per sequence")->capture_default_str();
    c_train->add_option("--embed-dim", tr.embed_dim, "Embedding width")->capture_default_str();
    c_train->add_option("--layers", tr.layers, "Transformer layers")->capture_default_str();
    c_train->add_option("--heads", tr.heads, "Attention heads")->capture_default_str();
    c_train->add_option("--max-steps", tr.max_steps, "Stop after this many steps (0: no limit)")->capture_default_str();

    GenerateArgs gen;
    auto* c_gen = app.add_subcommand("generate", "Sample SVGs from a checkpoint");
    c_gen->add_option("--checkpoint", gen.checkpoint, "Checkpoint file")->required();
    c_gen->add_option("--vocab", gen.vocab, "Vocabulary file")->required();
    c_gen->add_option("--library", gen.library, "Library file")->required();
    c_gen->add_option("--out", gen.out, "Output directory")->required();
    c_gen->add_option("--category", gen.categories, "Category (repeatable; default: all)");
    c_gen->add_option("--n", gen.n, "Number of SVGs")->capture_default_str();
    c_gen->add_option("--sampler", gen.sampler, "greedy or sample")->capture_default_str();
    c_gen->add_option("--temperature", gen.temperature, "Sampling temperature")->capture_default_str();
    c_gen->add_option("--top-k", gen.top_k, "Top-k cut (0 disables)")->capture_default_str();
    c_gen->add_option("--seed", gen.seed, "Sampling seed")->capture_default_str();
    c_gen->add_option("--max-components", gen.max_components, "Component groups per SVG")->capture_default_str();

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Uniqueness, novelty and complexity report");
    c_eval->add_option("--generated", ev.generated, "Generated token file")->required();
    c_eval->add_option("--training", ev.training, "Training token file")->required();
    c_eval->add_option("--vocab", ev.vocab, "Vocabulary file")->required();
    c_eval->add_option("--timing", ev.timing, "Timing CSV from generate");
    c_eval->add_option("--out", ev.out, "Report file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (verbose)
        log::set_level(log::Level::Info);
    if (quiet)
        log::set_level(log::Level::Error);

    try {
        if (*c_synth) return run_synth(synth);
        if (*c_clean) return run_clean(clean);
        if (*c_split) return run_split(split);
        if (*c_stats) return run_stats(stats);
        if (*c_build) return run_build_library(build);
        if (*c_encode) return run_encode(encode);
        if (*c_decode) return run_decode(decode);
        if (*c_train) return run_train(tr);
        if (*c_gen) return run_generate(gen);
        if (*c_eval) return run_eval(ev);
    } catch (const ExitError& e) {
        fmt::print(stderr, "svgforge: {}\n", e.what());
        return e.code;
    } catch (const Error& e) {
        fmt::print(stderr, "svgforge: {}\n", e.what());
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        fmt::print(stderr, "svgforge: {}\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        fmt::print(stderr, "svgforge: {}\n", e.what());
        return kExitFormat;
    }
    return kExitUsage;
}

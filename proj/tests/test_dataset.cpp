#include "fixtures.hpp"

#include "svgforge/dataset.hpp"
#include "svgforge/error.hpp"
#include "svgforge/raster.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace svgforge;
using namespace svgforge::testing;

TEST_CASE("manifest parsing")
{
    const auto recs = parse_manifest("a\tcat\tsvg/a.svg\n\nb\tdog\tb.svg\r\n");
    REQUIRE(recs.size() == 2);
    CHECK(recs[1] == ManifestRecord{"b", "dog", "b.svg"});
    CHECK(parse_manifest(format_manifest(recs)) == recs);
    CHECK(parse_manifest("").empty());
    CHECK_THROWS_AS(parse_manifest("a\tb\n"), Error);
    CHECK_THROWS_AS(parse_manifest("a\tb\tc\na\tb\td\n"), Error);
}

TEST_CASE("colorless detection")
{
    CHECK(detect_colorless(parse_svg(kNoFillSvg)) == Verdict::NoFillAttr);
    CHECK(detect_colorless(parse_svg(kBlackOnWhiteSvg)) == Verdict::BlackWhiteOnly);
    CHECK(detect_colorless(parse_svg(kBlackDominantSvg)) == Verdict::BlackDominant);
    CHECK(detect_colorless(parse_svg(kRedDominantSvg)) == Verdict::Kept);
    CHECK(detect_colorless(SvgDocument{}) == Verdict::Degenerate);

    // the dominance fixture really has the advertised pixel counts
    const ColorBitmap bmp = rasterize_document(parse_svg(kBlackDominantSvg), 100, 100);
    const auto black = std::count(bmp.pixels().begin(), bmp.pixels().end(), RgbColor{0, 0, 0});
    const auto red = std::count(bmp.pixels().begin(), bmp.pixels().end(), RgbColor{255, 0, 0});
    CHECK(black == 600);
    CHECK(red == 400);
}

TEST_CASE("clean report")
{
    std::vector<CorpusEntry> entries;
    for (auto& f : cleaning_fixtures())
        entries.push_back(f.entry);
    entries.push_back(entries.back());
    entries.back().id = "copy";
    const CleanResult r = clean_corpus(entries, std::vector<CleanEntry>{{"broken", Verdict::ParseError, "bad"}});
    CHECK(r.report.entries.size() == entries.size() + 1);
    CHECK(r.report.kept() + r.report.removed() == entries.size() + 1);
    CHECK(r.report.count(Verdict::Duplicate) == 1);
    CHECK(r.report.count(Verdict::ParseError) == 1);
    CHECK(r.kept.size() == r.report.kept());
    const std::string csv = r.report.to_csv();
    CHECK(csv.rfind("id,verdict,reason\n", 0) == 0);
    CHECK(csv.find("nofill,removed,NoFillAttr\n") != std::string::npos);
    CHECK(csv.find("reddominant,kept,\n") != std::string::npos);
    for (const auto& e : r.kept)
        CHECK(e.document.viewbox == ViewBox{0, 0, 100, 100});
}

TEST_CASE("viewbox normalization")
{
    SvgDocument doc;
    doc.viewbox = {0, 0, 200, 100};
    doc.paths.push_back({{PathCommand::move_to({0, 0}), PathCommand::line_to({200, 0}), PathCommand::line_to({200, 100}),
                          PathCommand::close()},
                         RgbColor{1, 2, 3}});
    const SvgDocument n = normalize_viewbox(doc);
    const Bbox b = path_bbox(n.paths[0].commands);
    CHECK(b.min_x == doctest::Approx(0));
    CHECK(b.max_x == doctest::Approx(100));
    CHECK(b.min_y == doctest::Approx(25));
    CHECK(b.max_y == doctest::Approx(75));
    CHECK(n.viewbox == ViewBox{0, 0, 100, 100});
    CHECK(normalize_viewbox(n) == n);

    SvgDocument square;
    square.paths.push_back({{PathCommand::move_to({0, 0}), PathCommand::line_to({100, 100})}, RgbColor{}});
    CHECK(normalize_viewbox(square) == square);
    CHECK_THROWS_AS(normalize_viewbox(SvgDocument{}), Error);

    // geometry is preserved up to the uniform map: render at proportional resolutions
    doc.viewbox = {0, 0, 200, 100};
    SvgDocument tall = doc;
    tall.viewbox = {0, -50, 200, 200};
    CHECK(rasterize_document(tall, 100, 100) == rasterize_document(n, 100, 100));
}

TEST_CASE("entry dedup")
{
    CorpusEntry a{"a", "c", parse_svg(kRedDominantSvg), {}};
    CorpusEntry b = a;
    b.id = "b";
    CorpusEntry swapped = a;
    swapped.id = "s";
    std::swap(swapped.document.paths[0], swapped.document.paths[1]);
    const std::vector<CorpusEntry> all{a, b, swapped};
    const auto d = dedup_entries(all);
    REQUIRE(d.size() == 2);
    CHECK(d[0].id == "a");
    CHECK(d[1].id == "s");
    CHECK(dedup_entries(d).size() == 2);
}

TEST_CASE("split allocation")
{
    CHECK(split_counts(100, {}) == std::array<std::size_t, 3>{90, 8, 2});
    CHECK(split_counts(1, {}) == std::array<std::size_t, 3>{1, 0, 0});
    CHECK(split_counts(10, {}) == std::array<std::size_t, 3>{9, 1, 0});
    for (std::size_t n = 0; n < 300; ++n) {
        const auto c = split_counts(n, {});
        REQUIRE(c[0] + c[1] + c[2] == n);
        REQUIRE(std::abs(static_cast<double>(c[0]) - 0.9 * n) <= 1.0);
        REQUIRE(std::abs(static_cast<double>(c[1]) - 0.08 * n) <= 1.0);
        REQUIRE(std::abs(static_cast<double>(c[2]) - 0.02 * n) <= 1.0);
    }
}

TEST_CASE("stratified split partitions")
{
    std::vector<std::string> cats;
    for (int i = 0; i < 100; ++i)
        cats.push_back("a");
    for (int i = 0; i < 10; ++i)
        cats.push_back("b");
    cats.push_back("c");
    const SplitIndices s = stratified_split(cats, {}, 5);
    CHECK(s.train.size() == 90 + 9 + 1);
    CHECK(s.validation.size() == 8 + 1);
    CHECK(s.test.size() == 2);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.validation.begin(), s.validation.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == cats.size());
    const SplitIndices again = stratified_split(cats, {}, 5);
    CHECK(again.train == s.train);
    CHECK_THROWS_AS(stratified_split(cats, {0.5, 0.5, 0.5}, 1), Error);
}

TEST_CASE("corpus stats")
{
    CHECK(corpus_stats({}).total == 0);
    std::vector<CorpusEntry> es(2);
    es[0].category = "x";
    es[0].document.paths.resize(2);
    es[1].category = "x";
    es[1].document.paths.resize(4);
    const CorpusStats s = corpus_stats(es);
    CHECK(s.mean_paths == 3.0);
    CHECK(s.min_paths == 2);
    CHECK(s.max_paths == 4);

    const auto corpus = synth_corpus({{"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"}, 500, 2, 40}, 7);
    const CorpusStats cs = corpus_stats(corpus);
    CHECK(cs.total == 500);
    REQUIRE(cs.categories.size() == 10);
    for (const auto& c : cs.categories)
        CHECK(c.count == 50);
    CHECK(cs.min_paths >= 2);
    CHECK(cs.max_paths <= 40);
}

TEST_CASE("synthetic corpus")
{
    const SynthSpec spec{{"a", "b"}, 40, 2, 40};
    const auto a = synth_corpus(spec, 7);
    const auto b = synth_corpus(spec, 7);
    REQUIRE(a.size() == 40);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(serialize_svg(a[i].document) == serialize_svg(b[i].document));
        CHECK(detect_colorless(a[i].document) == Verdict::Kept);
        CHECK(detect_colorless(parse_svg(serialize_svg(a[i].document))) == Verdict::Kept);
    }
    CHECK(serialize_svg(synth_corpus(spec, 8)[0].document) != serialize_svg(a[0].document));
    CHECK_THROWS_AS(synth_corpus({{}, 10}, 1), Error);
    CHECK_THROWS_AS(synth_corpus({{"a", "b"}, 5}, 1), Error);
    CHECK_THROWS_AS(synth_corpus({{"a"}, 5, 10, 2}, 1), Error);
}

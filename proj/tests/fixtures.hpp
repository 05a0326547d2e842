#pragma once

#include "svgforge/dataset.hpp"
#include "svgforge/svg.hpp"

#include <string>
#include <utility>
#include <vector>

namespace svgforge::testing {

inline const char* kNoFillSvg = R"~(<svg viewBox="0 0 100 100"><path d="M10 10L90 10L90 90Z"/></svg>)~";

inline const char* kBlackOnWhiteSvg = R"~(<svg viewBox="0 0 100 100"><rect width="100" height="100" fill="#ffffff"/>)~"
                                      R"~(<rect x="20" y="20" width="40" height="40" fill="#000000"/></svg>)~";

// 30x20 black = 600 px, 20x20 red = 400 px at 100x100
inline const char* kBlackDominantSvg = R"~(<svg viewBox="0 0 100 100"><rect x="0" y="0" width="30" height="20" fill="#000"/>)~"
                                       R"~(<rect x="50" y="50" width="20" height="20" fill="#f00"/></svg>)~";

inline const char* kRedDominantSvg = R"~(<svg viewBox="0 0 100 100"><rect x="0" y="0" width="20" height="20" fill="#000"/>)~"
                                     R"~(<rect x="50" y="50" width="30" height="20" fill="#f00"/></svg>)~";

struct CleaningFixture {
    CorpusEntry entry;
    Verdict expected;
};

// Three colorless fixtures, the swapped-count fixture and colorful synthetic entries: 50 total.
inline std::vector<CleaningFixture> cleaning_fixtures()
{
    std::vector<CleaningFixture> out;
    auto add = [&](std::string id, const char* svg, Verdict v) {
        out.push_back({{std::move(id), "fixture", parse_svg(svg), {}}, v});
    };
    add("nofill", kNoFillSvg, Verdict::NoFillAttr);
    add("blackwhite", kBlackOnWhiteSvg, Verdict::BlackWhiteOnly);
    add("blackdominant", kBlackDominantSvg, Verdict::BlackDominant);
    add("reddominant", kRedDominantSvg, Verdict::Kept);
    for (auto& e : synth_corpus({{"mix"}, 46, 2, 12}, 21))
        out.push_back({std::move(e), Verdict::Kept});
    return out;
}

} // namespace svgforge::testing

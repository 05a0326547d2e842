#include "svgforge/tokens.hpp"
#include "svgforge/error.hpp"
#include "svgforge/io.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <sstream>

namespace svgforge {

std::string_view to_string(TokenKind kind)
{
    switch (kind) {
    case TokenKind::Pad: return "PAD";
    case TokenKind::Bos: return "BOS";
    case TokenKind::Eos: return "EOS";
    case TokenKind::Category: return "CATEGORY";
    case TokenKind::Component: return "COMPONENT";
    case TokenKind::Offset: return "OFFSET";
    case TokenKind::Scale: return "SCALE";
    case TokenKind::Color: return "COLOR";
    }
    return "?";
}

std::string to_string(KindSet set)
{
    std::string out = "{";
    bool first = true;
    for (int k = 0; k <= static_cast<int>(TokenKind::Color); ++k) {
        if (set.contains(static_cast<TokenKind>(k))) {
            if (!first)
                out += ", ";
            out += to_string(static_cast<TokenKind>(k));
            first = false;
        }
    }
    return out + "}";
}

Vocabulary::Vocabulary(std::vector<std::string> categories, std::vector<ComponentId> components)
    : categories_(std::move(categories)), components_(std::move(components))
{
    std::sort(categories_.begin(), categories_.end());
    categories_.erase(std::unique(categories_.begin(), categories_.end()), categories_.end());
    std::sort(components_.begin(), components_.end());
    components_.erase(std::unique(components_.begin(), components_.end()), components_.end());
}

std::size_t Vocabulary::size() const
{
    return 3 + categories_.size() + components_.size() + kOffsetBins + kScaleBins + kColorValues;
}

TokenKind Vocabulary::kind_of(TokenId id) const
{
    if (id < 0 || static_cast<std::size_t>(id) >= size())
        throw Error(ErrorCode::TokenOutOfRange, fmt::format("token {} outside vocabulary of {}", id, size()));
    if (id == kPad)
        return TokenKind::Pad;
    if (id == kBos)
        return TokenKind::Bos;
    if (id == kEos)
        return TokenKind::Eos;
    if (id < component_base())
        return TokenKind::Category;
    if (id < offset_base())
        return TokenKind::Component;
    if (id < scale_base())
        return TokenKind::Offset;
    if (id < color_base())
        return TokenKind::Scale;
    return TokenKind::Color;
}

int Vocabulary::value_of(TokenId id) const
{
    switch (kind_of(id)) {
    case TokenKind::Pad:
    case TokenKind::Bos:
    case TokenKind::Eos: return 0;
    case TokenKind::Category: return id - category_base();
    case TokenKind::Component: return id - component_base();
    case TokenKind::Offset: return id - offset_base();
    case TokenKind::Scale: return id - scale_base();
    case TokenKind::Color: return id - color_base();
    }
    return 0;
}

TokenId Vocabulary::id_of(TokenKind kind, int value) const
{
    auto ranged = [&](TokenId base, std::size_t count) {
        if (value < 0 || static_cast<std::size_t>(value) >= count)
            throw Error(ErrorCode::TokenOutOfRange, fmt::format("{} value {} out of range", svgforge::to_string(kind), value));
        return base + value;
    };
    switch (kind) {
    case TokenKind::Pad: return kPad;
    case TokenKind::Bos: return kBos;
    case TokenKind::Eos: return kEos;
    case TokenKind::Category: return ranged(category_base(), categories_.size());
    case TokenKind::Component: return ranged(component_base(), components_.size());
    case TokenKind::Offset: return ranged(offset_base(), kOffsetBins);
    case TokenKind::Scale: return ranged(scale_base(), kScaleBins);
    case TokenKind::Color: return ranged(color_base(), kColorValues);
    }
    return kPad;
}

std::optional<TokenId> Vocabulary::category_token(std::string_view category) const
{
    auto it = std::lower_bound(categories_.begin(), categories_.end(), category);
    if (it == categories_.end() || *it != category)
        return std::nullopt;
    return category_base() + static_cast<TokenId>(it - categories_.begin());
}

std::optional<TokenId> Vocabulary::component_token(ComponentId component) const
{
    auto it = std::lower_bound(components_.begin(), components_.end(), component);
    if (it == components_.end() || *it != component)
        return std::nullopt;
    return component_base() + static_cast<TokenId>(it - components_.begin());
}

std::string Vocabulary::to_string() const
{
    std::string out = fmt::format("svgforge-vocab v1 categories={} components={} size={}\n", categories_.size(),
                                  components_.size(), size());
    for (const auto& c : categories_)
        out += fmt::format("category {}\n", c);
    for (ComponentId c : components_)
        out += fmt::format("component {}\n", c);
    return out;
}

Vocabulary Vocabulary::from_string(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (!line.starts_with("svgforge-vocab v1 "))
        throw Error(ErrorCode::FormatVersionMismatch, "expected 'svgforge-vocab v1' header");
    std::vector<std::string> categories;
    std::vector<ComponentId> components;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (line.starts_with("category ")) {
            categories.push_back(line.substr(9));
        } else if (line.starts_with("component ")) {
            try {
                components.push_back(static_cast<ComponentId>(std::stol(line.substr(10))));
            } catch (const std::exception&) {
                throw Error(ErrorCode::FormatVersionMismatch, fmt::format("bad vocabulary line '{}'", line));
            }
        } else {
            throw Error(ErrorCode::FormatVersionMismatch, fmt::format("bad vocabulary line '{}'", line));
        }
    }
    Vocabulary v(std::move(categories), std::move(components));
    if (v.to_string() != text)
        throw Error(ErrorCode::FormatVersionMismatch, "vocabulary file is not in canonical form");
    return v;
}

std::uint64_t Vocabulary::hash() const { return fnv1a(to_string()); }

Vocabulary build_vocabulary(const Library& library, std::vector<std::string> categories)
{
    auto roots = library.roots();
    if (roots.empty())
        throw Error(ErrorCode::EmptyLibrary, "library has no root components");
    return Vocabulary(std::move(categories), std::move(roots));
}

int quantize_offset(double x)
{
    const double clamped = std::clamp(x, 0.0, static_cast<double>(kOffsetBins - 1));
    return static_cast<int>(std::round(clamped));
}

double dequantize_offset(int bin) { return static_cast<double>(bin); }

int quantize_scale(double s)
{
    if (!(s > 0.0))
        throw Error(ErrorCode::NonPositiveScale, fmt::format("scale {}", s));
    const double span = std::log(kScaleMax / kScaleMin);
    const double pos = (kScaleBins - 1) * (std::log(s) - std::log(kScaleMin)) / span;
    return static_cast<int>(std::clamp(std::round(pos), 0.0, static_cast<double>(kScaleBins - 1)));
}

double dequantize_scale(int bin)
{
    const double span = std::log(kScaleMax / kScaleMin);
    return std::exp(std::log(kScaleMin) + bin * span / (kScaleBins - 1));
}

TokenSequence encode_svg(const EncodedSvg& e, const Vocabulary& vocab)
{
    const auto cat = vocab.category_token(e.category);
    if (!cat)
        throw Error(ErrorCode::UnknownCategory, fmt::format("'{}'", e.category));
    TokenSequence t;
    t.reserve(3 + kGroupSize * e.placements.size());
    t.push_back(kBos);
    t.push_back(*cat);
    for (const auto& p : e.placements) {
        const auto comp = vocab.component_token(p.component_id);
        if (!comp)
            throw Error(ErrorCode::UnknownComponent, fmt::format("component {} is not in the vocabulary", p.component_id));
        t.push_back(*comp);
        t.push_back(vocab.id_of(TokenKind::Offset, quantize_offset(p.offset_x)));
        t.push_back(vocab.id_of(TokenKind::Offset, quantize_offset(p.offset_y)));
        t.push_back(vocab.id_of(TokenKind::Scale, quantize_scale(p.scale)));
        t.push_back(vocab.id_of(TokenKind::Color, p.color.r));
        t.push_back(vocab.id_of(TokenKind::Color, p.color.g));
        t.push_back(vocab.id_of(TokenKind::Color, p.color.b));
    }
    t.push_back(kEos);
    return t;
}

KindSet legal_kinds(std::size_t position)
{
    if (position == 0)
        return {TokenKind::Bos};
    if (position == 1)
        return {TokenKind::Category};
    switch ((position - 2) % kGroupSize) {
    case 0: return {TokenKind::Component, TokenKind::Eos};
    case 1:
    case 2: return {TokenKind::Offset};
    case 3: return {TokenKind::Scale};
    default: return {TokenKind::Color};
    }
}

Validation validate_sequence(const TokenSequence& t, const Vocabulary& vocab)
{
    Validation v;
    v.kinds.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < 0 || static_cast<std::size_t>(t[i]) >= vocab.size()) {
            v.violation = GrammarViolation{i, std::nullopt, legal_kinds(i)};
            return v;
        }
        const TokenKind kind = vocab.kind_of(t[i]);
        const bool after_eos = !v.kinds.empty() && v.kinds.back() == TokenKind::Eos;
        const KindSet expected = after_eos ? KindSet{} : legal_kinds(i);
        if (!expected.contains(kind)) {
            v.violation = GrammarViolation{i, kind, expected};
            return v;
        }
        v.kinds.push_back(kind);
    }
    if (v.kinds.empty() || v.kinds.back() != TokenKind::Eos)
        v.violation = GrammarViolation{t.size(), std::nullopt, legal_kinds(t.size())};
    return v;
}

namespace {

[[noreturn]] void throw_violation(const GrammarViolation& g)
{
    throw Error(ErrorCode::GrammarViolation,
                fmt::format("position {}: found {}, expected {}", g.position,
                            g.found ? std::string(to_string(*g.found)) : std::string("end of sequence"),
                            to_string(g.expected)));
}

} // namespace

EncodedSvg decode_placements(const TokenSequence& t, const Vocabulary& vocab)
{
    const Validation v = validate_sequence(t, vocab);
    if (v.violation)
        throw_violation(*v.violation);
    EncodedSvg e;
    e.category = vocab.category_at(t[1]);
    const std::size_t groups = (t.size() - 3) / kGroupSize;
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t base = 2 + g * kGroupSize;
        PlacedComponent p;
        p.component_id = vocab.component_at(t[base]);
        p.offset_x = dequantize_offset(vocab.value_of(t[base + 1]));
        p.offset_y = dequantize_offset(vocab.value_of(t[base + 2]));
        p.scale = dequantize_scale(vocab.value_of(t[base + 3]));
        p.color = RgbColor::from_ints(vocab.value_of(t[base + 4]), vocab.value_of(t[base + 5]),
                                      vocab.value_of(t[base + 6]));
        e.placements.push_back(p);
    }
    return e;
}

SvgDocument decode_tokens(const TokenSequence& t, const Vocabulary& vocab, const Library& library)
{
    const EncodedSvg e = decode_placements(t, vocab);
    SvgDocument doc;
    doc.viewbox = {0.0, 0.0, 100.0, 100.0};
    for (const auto& p : e.placements)
        doc.paths.push_back(recover_component(p, library));
    return doc;
}

std::string tokens_to_string(const TokenFile& file)
{
    std::string out = fmt::format("svgforge-tokens v1 vocab={}\n", file.vocab_size);
    for (const auto& seq : file.sequences)
        out += fmt::format("{}\n", fmt::join(seq, " "));
    return out;
}

TokenFile tokens_from_string(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    constexpr std::string_view prefix = "svgforge-tokens v1 vocab=";
    if (!line.starts_with(prefix))
        throw Error(ErrorCode::FormatVersionMismatch, "expected 'svgforge-tokens v1' header");
    TokenFile file;
    try {
        file.vocab_size = std::stoul(line.substr(prefix.size()));
    } catch (const std::exception&) {
        throw Error(ErrorCode::FormatVersionMismatch, "bad vocab size in token header");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        TokenSequence seq;
        std::string tok;
        while (ls >> tok) {
            long v = 0;
            try {
                std::size_t used = 0;
                v = std::stol(tok, &used);
                if (used != tok.size())
                    throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw Error(ErrorCode::TokenOutOfRange, fmt::format("line {}: bad token '{}'", line_no, tok));
            }
            if (v < 0 || static_cast<std::size_t>(v) >= file.vocab_size)
                throw Error(ErrorCode::TokenOutOfRange, fmt::format("line {}: token {} outside vocabulary", line_no, v));
            seq.push_back(static_cast<TokenId>(v));
        }
        if (!seq.empty())
            file.sequences.push_back(std::move(seq));
    }
    return file;
}

void save_tokens(const TokenFile& file, const std::filesystem::path& path)
{
    write_text_file(path, tokens_to_string(file));
}

TokenFile load_tokens(const std::filesystem::path& path) { return tokens_from_string(read_text_file(path)); }

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path)
{
    write_text_file(path, vocab.to_string());
}

Vocabulary load_vocabulary(const std::filesystem::path& path)
{
    return Vocabulary::from_string(read_text_file(path));
}

} // namespace svgforge

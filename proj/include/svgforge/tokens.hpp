#pragma once

#include "svgforge/library.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace svgforge {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

enum class TokenKind : std::uint8_t { Pad, Bos, Eos, Category, Component, Offset, Scale, Color };

std::string_view to_string(TokenKind kind);

/// Bit set over TokenKind.
struct KindSet {
    std::uint16_t bits = 0;

    constexpr KindSet() = default;
    constexpr KindSet(std::initializer_list<TokenKind> kinds)
    {
        for (TokenKind k : kinds)
            bits |= static_cast<std::uint16_t>(1u << static_cast<unsigned>(k));
    }
    constexpr bool contains(TokenKind k) const { return (bits >> static_cast<unsigned>(k)) & 1u; }
    constexpr bool empty() const { return bits == 0; }
    friend constexpr bool operator==(KindSet, KindSet) = default;
};

std::string to_string(KindSet set);

inline constexpr int kGroupSize = 7;
inline constexpr int kOffsetBins = 101;
inline constexpr int kScaleBins = 64;
inline constexpr int kColorValues = 256;
inline constexpr double kScaleMin = 0.01;
inline constexpr double kScaleMax = 2.0;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;

/// Contiguous id layout: PAD, BOS, EOS, categories, components, offsets, scales, colors.
class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> categories, std::vector<ComponentId> components);

    std::size_t size() const;
    std::size_t category_count() const { return categories_.size(); }
    std::size_t component_count() const { return components_.size(); }
    const std::vector<std::string>& categories() const { return categories_; }
    const std::vector<ComponentId>& components() const { return components_; }

    TokenId category_base() const { return 3; }
    TokenId component_base() const { return category_base() + static_cast<TokenId>(categories_.size()); }
    TokenId offset_base() const { return component_base() + static_cast<TokenId>(components_.size()); }
    TokenId scale_base() const { return offset_base() + kOffsetBins; }
    TokenId color_base() const { return scale_base() + kScaleBins; }

    TokenKind kind_of(TokenId id) const;
    // Index within the kind's range (category index, component index, bin, channel value).
    int value_of(TokenId id) const;
    TokenId id_of(TokenKind kind, int value) const;

    std::optional<TokenId> category_token(std::string_view category) const;
    std::optional<TokenId> component_token(ComponentId component) const;
    ComponentId component_at(TokenId id) const { return components_[value_of(id)]; }
    const std::string& category_at(TokenId id) const { return categories_[value_of(id)]; }

    std::string to_string() const;
    static Vocabulary from_string(const std::string& text);
    std::uint64_t hash() const; // FNV-1a over to_string()

    friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

private:
    std::vector<std::string> categories_;   // sorted, unique
    std::vector<ComponentId> components_;   // library roots, ascending
};

/// Throws EmptyLibrary when the library has no roots.
Vocabulary build_vocabulary(const Library& library, std::vector<std::string> categories);

int quantize_offset(double x);
double dequantize_offset(int bin);
/// Throws NonPositiveScale.
int quantize_scale(double s);
double dequantize_scale(int bin);

TokenSequence encode_svg(const EncodedSvg& e, const Vocabulary& vocab);

/// Legal token kinds at `position` of a grammar-valid prefix, before EOS is seen.
KindSet legal_kinds(std::size_t position);

struct GrammarViolation {
    std::size_t position = 0;
    std::optional<TokenKind> found; // nullopt: sequence ended early
    KindSet expected;
};

struct Validation {
    std::vector<TokenKind> kinds;
    std::optional<GrammarViolation> violation;

    bool ok() const { return !violation.has_value(); }
};

Validation validate_sequence(const TokenSequence& t, const Vocabulary& vocab);

/// Throws GrammarViolation (with position and expected kinds) on invalid input.
EncodedSvg decode_placements(const TokenSequence& t, const Vocabulary& vocab);
SvgDocument decode_tokens(const TokenSequence& t, const Vocabulary& vocab, const Library& library);

struct TokenFile {
    std::size_t vocab_size = 0;
    std::vector<TokenSequence> sequences;
};

std::string tokens_to_string(const TokenFile& file);
TokenFile tokens_from_string(const std::string& text);
void save_tokens(const TokenFile& file, const std::filesystem::path& path);
TokenFile load_tokens(const std::filesystem::path& path);
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

} // namespace svgforge

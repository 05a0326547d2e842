#pragma once

#include "svgforge/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace svgforge {

struct RgbColor {
    std::uint8_t r = 0, g = 0, b = 0;

    /// Throws InvalidArgument when a channel is outside [0, 255].
    static RgbColor from_ints(int r, int g, int b);

    friend bool operator==(const RgbColor&, const RgbColor&) = default;
    friend auto operator<=>(const RgbColor&, const RgbColor&) = default;
};

enum class FillRule { NonZero, EvenOdd };

struct SvgPath {
    CommandList commands;
    std::optional<RgbColor> fill; // nullopt means fill="none"
    FillRule fill_rule = FillRule::NonZero;
    // Whether a fill attribute was present in the source (own or inherited). Not part of equality.
    bool fill_specified = true;

    friend bool operator==(const SvgPath& l, const SvgPath& r)
    {
        return l.commands == r.commands && l.fill == r.fill && l.fill_rule == r.fill_rule;
    }
};

struct ViewBox {
    double min_x = 0.0, min_y = 0.0, width = 100.0, height = 100.0;

    friend bool operator==(const ViewBox&, const ViewBox&) = default;
};

struct SvgDocument {
    ViewBox viewbox;
    std::vector<SvgPath> paths; // paint order

    friend bool operator==(const SvgDocument&, const SvgDocument&) = default;
};

// Minimal XML element tree; text content is discarded.
struct XmlElement {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<XmlElement> children;
    std::size_t offset = 0; // byte offset of '<' in the source

    const std::string* attribute(std::string_view key) const;
};

XmlElement parse_xml(std::string_view text);

/// A drawable element after group flattening: own attributes merged with inherited
/// presentation attributes, and the composed transform of all ancestors and itself.
struct FlatElement {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    AffineTransform transform;
    std::size_t offset = 0;

    const std::string* attribute(std::string_view key) const;
};

/// Removes `g` elements from the children of `root`. Inheritable presentation attributes
/// (fill, fill-rule, opacity) are pushed down; the child's own value wins.
std::vector<FlatElement> flatten_groups(const XmlElement& root);

AffineTransform parse_transform(std::string_view text);

/// rect, circle, ellipse, line, polyline, polygon into path commands (untransformed).
/// Throws DegenerateShape on non-positive size or radius.
CommandList shape_to_path(const FlatElement& element);

CommandList parse_path_data(std::string_view d);

/// "none" maps to nullopt. Throws UnknownColor.
std::optional<RgbColor> parse_color(std::string_view s);

SvgDocument parse_svg(std::string_view text);

std::string format_number(double v);
std::string format_path_data(std::span<const PathCommand> commands);
std::string format_color(const RgbColor& c);
std::string serialize_svg(const SvgDocument& doc);

} // namespace svgforge

#include "svgforge/svg.hpp"
#include "svgforge/error.hpp"
#include "svgforge/log.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fmt/format.h>

namespace svgforge {

RgbColor RgbColor::from_ints(int r, int g, int b)
{
    auto ok = [](int v) { return v >= 0 && v <= 255; };
    if (!ok(r) || !ok(g) || !ok(b))
        throw Error(ErrorCode::InvalidArgument, fmt::format("color channel out of range ({},{},{})", r, g, b));
    return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

std::string_view trim(std::string_view s)
{
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Length of the SVG number starting at s[0], or 0 when none.
std::size_t scan_number(std::string_view s)
{
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-'))
        ++i;
    std::size_t digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        ++i;
        ++digits;
    }
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            ++i;
            ++digits;
        }
    }
    if (digits == 0)
        return 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-'))
            ++j;
        if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j])))
                ++j;
            i = j;
        }
    }
    return i;
}

double to_double(std::string_view s)
{
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorCode::InvalidArgument, fmt::format("bad number '{}'", s));
    return v;
}

// Parses whitespace/comma separated numbers; throws InvalidArgument on junk.
std::vector<double> parse_number_list(std::string_view s)
{
    std::vector<double> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_space(s[i]) || s[i] == ',') {
            ++i;
            continue;
        }
        const std::size_t n = scan_number(s.substr(i));
        if (n == 0)
            throw Error(ErrorCode::InvalidArgument, fmt::format("bad number list '{}'", s));
        out.push_back(to_double(s.substr(i, n)));
        i += n;
    }
    return out;
}

// Leading number of a length attribute ("12", "12px"); percentages are rejected.
std::optional<double> parse_length(const std::string* attr)
{
    if (!attr)
        return std::nullopt;
    std::string_view s = trim(*attr);
    const std::size_t n = scan_number(s);
    if (n == 0)
        return std::nullopt;
    std::string_view unit = trim(s.substr(n));
    if (!unit.empty() && unit != "px")
        return std::nullopt;
    return to_double(s.substr(0, n));
}

// ---------------------------------------------------------------------------- XML

class XmlReader {
public:
    explicit XmlReader(std::string_view text) : s_(text) {}

    XmlElement parse_document()
    {
        std::optional<XmlElement> root;
        while (true) {
            skip_misc();
            if (pos_ >= s_.size())
                break;
            if (s_[pos_] != '<')
                fail("text outside root element");
            if (root)
                fail("multiple root elements");
            root = parse_element();
        }
        if (!root)
            fail("no root element");
        return std::move(*root);
    }

private:
    [[noreturn]] void fail(std::string_view what) const
    {
        throw Error(ErrorCode::MalformedXml, fmt::format("{} at byte {}", what, pos_));
    }

    bool starts_with(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

    void skip_until(std::string_view terminator)
    {
        const std::size_t at = s_.find(terminator, pos_);
        if (at == std::string_view::npos)
            fail(fmt::format("unterminated construct, expected '{}'", terminator));
        pos_ = at + terminator.size();
    }

    void skip_spaces()
    {
        while (pos_ < s_.size() && is_space(s_[pos_]))
            ++pos_;
    }

    // Whitespace, comments, processing instructions, and DOCTYPE outside elements.
    void skip_misc()
    {
        while (true) {
            skip_spaces();
            if (starts_with("<?"))
                skip_until("?>");
            else if (starts_with("<!--"))
                skip_until("-->");
            else if (starts_with("<!DOCTYPE") || starts_with("<!doctype"))
                skip_doctype();
            else
                return;
        }
    }

    void skip_doctype()
    {
        int depth = 0;
        while (pos_ < s_.size()) {
            const char c = s_[pos_++];
            if (c == '[')
                ++depth;
            else if (c == ']')
                --depth;
            else if (c == '>' && depth <= 0)
                return;
        }
        fail("unterminated DOCTYPE");
    }

    static bool is_name_char(char c)
    {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' || c == '.';
    }

    std::string parse_name()
    {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && is_name_char(s_[pos_]))
            ++pos_;
        if (pos_ == start)
            fail("expected a name");
        return std::string(s_.substr(start, pos_ - start));
    }

    std::string decode_entities(std::string_view raw)
    {
        std::string out;
        out.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] != '&') {
                out.push_back(raw[i]);
                continue;
            }
            const std::size_t semi = raw.find(';', i);
            if (semi == std::string_view::npos)
                fail("unterminated entity");
            const std::string_view ent = raw.substr(i + 1, semi - i - 1);
            if (ent == "amp")
                out.push_back('&');
            else if (ent == "lt")
                out.push_back('<');
            else if (ent == "gt")
                out.push_back('>');
            else if (ent == "quot")
                out.push_back('"');
            else if (ent == "apos")
                out.push_back('\'');
            else if (!ent.empty() && ent[0] == '#') {
                unsigned long code = 0;
                const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
                const std::string_view digits = ent.substr(hex ? 2 : 1);
                auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), code, hex ? 16 : 10);
                if (ec != std::errc() || p != digits.data() + digits.size() || code > 0x7f)
                    fail("unsupported character reference");
                out.push_back(static_cast<char>(code));
            } else {
                fail(fmt::format("unknown entity '&{};'", ent));
            }
            i = semi;
        }
        return out;
    }

    XmlElement parse_element()
    {
        XmlElement el;
        el.offset = pos_;
        ++pos_; // '<'
        el.name = parse_name();
        while (true) {
            skip_spaces();
            if (pos_ >= s_.size())
                fail("unterminated start tag");
            if (starts_with("/>")) {
                pos_ += 2;
                return el;
            }
            if (s_[pos_] == '>') {
                ++pos_;
                break;
            }
            std::string key = parse_name();
            skip_spaces();
            if (pos_ >= s_.size() || s_[pos_] != '=')
                fail("expected '=' after attribute name");
            ++pos_;
            skip_spaces();
            if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\''))
                fail("expected quoted attribute value");
            const char quote = s_[pos_++];
            const std::size_t end = s_.find(quote, pos_);
            if (end == std::string_view::npos)
                fail("unterminated attribute value");
            std::string value = decode_entities(s_.substr(pos_, end - pos_));
            pos_ = end + 1;
            for (const auto& [k, v] : el.attributes) {
                if (k == key)
                    fail(fmt::format("duplicate attribute '{}'", key));
            }
            el.attributes.emplace_back(std::move(key), std::move(value));
        }
        // Content
        while (true) {
            if (pos_ >= s_.size())
                fail(fmt::format("unclosed element <{}>", el.name));
            if (starts_with("</")) {
                pos_ += 2;
                const std::string closing = parse_name();
                if (closing != el.name)
                    fail(fmt::format("mismatched closing tag </{}> for <{}>", closing, el.name));
                skip_spaces();
                if (pos_ >= s_.size() || s_[pos_] != '>')
                    fail("expected '>'");
                ++pos_;
                return el;
            }
            if (starts_with("<!--")) {
                skip_until("-->");
            } else if (starts_with("<![CDATA[")) {
                skip_until("]]>");
            } else if (starts_with("<?")) {
                skip_until("?>");
            } else if (s_[pos_] == '<') {
                el.children.push_back(parse_element());
            } else {
                const std::size_t next = s_.find('<', pos_);
                pos_ = next == std::string_view::npos ? s_.size() : next;
            }
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

const std::string* find_attribute(const std::vector<std::pair<std::string, std::string>>& attrs,
                                  std::string_view key)
{
    for (const auto& [k, v] : attrs) {
        if (k == key)
            return &v;
    }
    return nullptr;
}

void set_attribute(std::vector<std::pair<std::string, std::string>>& attrs, std::string_view key,
                   std::string value)
{
    for (auto& [k, v] : attrs) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    attrs.emplace_back(std::string(key), std::move(value));
}

// Presentation properties declared in a style attribute override plain attributes.
std::vector<std::pair<std::string, std::string>> effective_attributes(const XmlElement& el)
{
    auto attrs = el.attributes;
    if (const std::string* style = find_attribute(attrs, "style")) {
        std::string_view rest = *style;
        while (!rest.empty()) {
            const std::size_t semi = rest.find(';');
            const std::string_view decl = rest.substr(0, semi);
            rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
            const std::size_t colon = decl.find(':');
            if (colon == std::string_view::npos)
                continue;
            const std::string key = lower(trim(decl.substr(0, colon)));
            const std::string value(trim(decl.substr(colon + 1)));
            if (!key.empty())
                set_attribute(attrs, key, value);
        }
    }
    return attrs;
}

constexpr std::array<std::string_view, 3> kInheritable = {"fill", "fill-rule", "opacity"};

void flatten_into(const XmlElement& el, const std::vector<std::pair<std::string, std::string>>& inherited,
                  const AffineTransform& parent_ctm, std::vector<FlatElement>& out)
{
    auto attrs = effective_attributes(el);
    AffineTransform ctm = parent_ctm;
    if (const std::string* t = find_attribute(attrs, "transform"))
        ctm = parent_ctm * parse_transform(*t);

    if (el.name == "g") {
        auto next = inherited;
        for (std::string_view key : kInheritable) {
            if (const std::string* v = find_attribute(attrs, key))
                set_attribute(next, key, *v);
        }
        for (const auto& child : el.children)
            flatten_into(child, next, ctm, out);
        return;
    }

    FlatElement flat;
    flat.name = el.name;
    flat.offset = el.offset;
    flat.transform = ctm;
    flat.attributes = std::move(attrs);
    for (const auto& [k, v] : inherited) {
        if (!find_attribute(flat.attributes, k))
            flat.attributes.emplace_back(k, v);
    }
    out.push_back(std::move(flat));
}

// ---------------------------------------------------------------------------- path data

class PathDataParser {
public:
    explicit PathDataParser(std::string_view d) : d_(d) {}

    CommandList parse()
    {
        char cmd = 0;
        bool first = true;
        while (true) {
            skip_separators();
            if (pos_ >= d_.size())
                break;
            const char c = d_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c))) {
                if (c != 'e' && c != 'E') {
                    cmd = c;
                    ++pos_;
                    ++token_;
                    if (first && cmd != 'M' && cmd != 'm')
                        fail(fmt::format("path must begin with M, found '{}'", cmd));
                    first = false;
                    if (!is_command_letter(cmd))
                        fail(fmt::format("unknown command '{}'", cmd));
                    if (cmd == 'Z' || cmd == 'z') {
                        close_path();
                        continue;
                    }
                    execute(cmd);
                    continue;
                }
            }
            if (cmd == 0)
                fail("path must begin with M");
            if (cmd == 'Z' || cmd == 'z')
                fail("numbers after closepath");
            // Implicit repetition; M becomes L after its first pair.
            if (cmd == 'M')
                cmd = 'L';
            else if (cmd == 'm')
                cmd = 'l';
            execute(cmd);
        }
        return std::move(out_);
    }

private:
    static bool is_command_letter(char c)
    {
        constexpr std::string_view letters = "MmLlHhVvCcSsQqTtAaZz";
        return letters.find(c) != std::string_view::npos;
    }

    [[noreturn]] void fail(std::string_view what) const
    {
        throw Error(ErrorCode::InvalidPathData, fmt::format("{} (token {}, byte {})", what, token_, pos_));
    }

    void skip_separators()
    {
        while (pos_ < d_.size() && (is_space(d_[pos_]) || d_[pos_] == ','))
            ++pos_;
    }

    double number()
    {
        skip_separators();
        if (pos_ >= d_.size())
            fail("missing argument");
        const std::size_t n = scan_number(d_.substr(pos_));
        if (n == 0) {
            if (std::isalpha(static_cast<unsigned char>(d_[pos_])))
                fail("wrong number of arguments");
            fail(fmt::format("non-numeric token '{}'", d_[pos_]));
        }
        const double v = to_double(d_.substr(pos_, n));
        if (!std::isfinite(v))
            fail("non-finite coordinate");
        pos_ += n;
        ++token_;
        return v;
    }

    bool flag()
    {
        skip_separators();
        if (pos_ < d_.size() && (d_[pos_] == '0' || d_[pos_] == '1')) {
            const bool v = d_[pos_] == '1';
            ++pos_;
            ++token_;
            return v;
        }
        fail("expected arc flag 0 or 1");
    }

    Point point(bool relative)
    {
        const double x = number();
        const double y = number();
        return relative ? Point{cur_.x + x, cur_.y + y} : Point{x, y};
    }

    void ensure_subpath()
    {
        if (needs_move_) {
            out_.push_back(PathCommand::move_to(start_));
            needs_move_ = false;
        }
    }

    void close_path()
    {
        if (!out_.empty() && out_.back().kind != CommandKind::ClosePath)
            out_.push_back(PathCommand::close());
        cur_ = start_;
        needs_move_ = true;
        last_cubic_ctrl_.reset();
        last_quad_ctrl_.reset();
    }

    void execute(char cmd)
    {
        const bool rel = std::islower(static_cast<unsigned char>(cmd));
        const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(cmd)));
        std::optional<Point> cubic_ctrl;
        std::optional<Point> quad_ctrl;
        switch (up) {
        case 'M': {
            const Point p = point(rel);
            out_.push_back(PathCommand::move_to(p));
            cur_ = start_ = p;
            needs_move_ = false;
            break;
        }
        case 'L': {
            const Point p = point(rel);
            ensure_subpath();
            out_.push_back(PathCommand::line_to(p));
            cur_ = p;
            break;
        }
        case 'H': {
            const double x = number();
            ensure_subpath();
            cur_ = {rel ? cur_.x + x : x, cur_.y};
            out_.push_back(PathCommand::line_to(cur_));
            break;
        }
        case 'V': {
            const double y = number();
            ensure_subpath();
            cur_ = {cur_.x, rel ? cur_.y + y : y};
            out_.push_back(PathCommand::line_to(cur_));
            break;
        }
        case 'C': {
            const Point c1 = point(rel);
            const Point c2 = point(rel);
            const Point p = point(rel);
            ensure_subpath();
            out_.push_back(PathCommand::cubic_to(c1, c2, p));
            cubic_ctrl = c2;
            cur_ = p;
            break;
        }
        case 'S': {
            const Point c2 = point(rel);
            const Point p = point(rel);
            ensure_subpath();
            const Point c1 = last_cubic_ctrl_ ? cur_ + (cur_ - *last_cubic_ctrl_) : cur_;
            out_.push_back(PathCommand::cubic_to(c1, c2, p));
            cubic_ctrl = c2;
            cur_ = p;
            break;
        }
        case 'Q': {
            const Point q = point(rel);
            const Point p = point(rel);
            ensure_subpath();
            const CubicBezier cb = quad_to_cubic(cur_, q, p);
            out_.push_back(PathCommand::cubic_to(cb.c1, cb.c2, cb.p1));
            quad_ctrl = q;
            cur_ = p;
            break;
        }
        case 'T': {
            const Point p = point(rel);
            ensure_subpath();
            const Point q = last_quad_ctrl_ ? cur_ + (cur_ - *last_quad_ctrl_) : cur_;
            const CubicBezier cb = quad_to_cubic(cur_, q, p);
            out_.push_back(PathCommand::cubic_to(cb.c1, cb.c2, cb.p1));
            quad_ctrl = q;
            cur_ = p;
            break;
        }
        case 'A': {
            const double rx = number();
            const double ry = number();
            const double rot = number();
            const bool large = flag();
            const bool sweep = flag();
            const Point p = point(rel);
            ensure_subpath();
            for (const auto& c : arc_to_cubics(cur_, rx, ry, rot, large, sweep, p))
                out_.push_back(c);
            cur_ = p;
            break;
        }
        default: fail(fmt::format("unknown command '{}'", cmd));
        }
        last_cubic_ctrl_ = cubic_ctrl;
        last_quad_ctrl_ = quad_ctrl;
    }

    std::string_view d_;
    std::size_t pos_ = 0;
    std::size_t token_ = 0;
    CommandList out_;
    Point cur_{};
    Point start_{};
    bool needs_move_ = false;
    std::optional<Point> last_cubic_ctrl_;
    std::optional<Point> last_quad_ctrl_;
};

double required_number(const FlatElement& el, std::string_view key, double fallback)
{
    const std::string* v = el.attribute(key);
    if (!v)
        return fallback;
    const std::optional<double> len = parse_length(v);
    if (!len)
        throw Error(ErrorCode::InvalidArgument, fmt::format("<{}> attribute {}='{}' is not a number", el.name, key, *v));
    return *len;
}

CommandList ellipse_commands(double cx, double cy, double rx, double ry)
{
    constexpr double k = 0.5522847498;
    const double kx = k * rx;
    const double ky = k * ry;
    return {
        PathCommand::move_to({cx + rx, cy}),
        PathCommand::cubic_to({cx + rx, cy + ky}, {cx + kx, cy + ry}, {cx, cy + ry}),
        PathCommand::cubic_to({cx - kx, cy + ry}, {cx - rx, cy + ky}, {cx - rx, cy}),
        PathCommand::cubic_to({cx - rx, cy - ky}, {cx - kx, cy - ry}, {cx, cy - ry}),
        PathCommand::cubic_to({cx + kx, cy - ry}, {cx + rx, cy - ky}, {cx + rx, cy}),
        PathCommand::close(),
    };
}

bool is_stroke_attribute(std::string_view key)
{
    return key == "stroke" || key.starts_with("stroke-");
}

} // namespace

const std::string* XmlElement::attribute(std::string_view key) const { return find_attribute(attributes, key); }

const std::string* FlatElement::attribute(std::string_view key) const { return find_attribute(attributes, key); }

XmlElement parse_xml(std::string_view text) { return XmlReader(text).parse_document(); }

std::vector<FlatElement> flatten_groups(const XmlElement& root)
{
    std::vector<FlatElement> out;
    for (const auto& child : root.children)
        flatten_into(child, {}, AffineTransform::identity(), out);
    return out;
}

AffineTransform parse_transform(std::string_view text)
{
    AffineTransform result;
    std::string_view rest = text;
    while (true) {
        rest = trim(rest);
        while (!rest.empty() && rest.front() == ',')
            rest = trim(rest.substr(1));
        if (rest.empty())
            break;
        const std::size_t open = rest.find('(');
        const std::size_t close = rest.find(')');
        if (open == std::string_view::npos || close == std::string_view::npos || close < open)
            throw Error(ErrorCode::InvalidArgument, fmt::format("malformed transform '{}'", text));
        const std::string name(trim(rest.substr(0, open)));
        const std::vector<double> args = parse_number_list(rest.substr(open + 1, close - open - 1));
        rest = rest.substr(close + 1);

        AffineTransform t;
        if (name == "translate" && (args.size() == 1 || args.size() == 2)) {
            t = AffineTransform::translate(args[0], args.size() == 2 ? args[1] : 0.0);
        } else if (name == "scale" && (args.size() == 1 || args.size() == 2)) {
            t = AffineTransform::scale(args[0], args.size() == 2 ? args[1] : args[0]);
        } else if (name == "rotate" && (args.size() == 1 || args.size() == 3)) {
            t = AffineTransform::rotate_deg(args[0]);
            if (args.size() == 3) {
                t = AffineTransform::translate(args[1], args[2]) * t *
                    AffineTransform::translate(-args[1], -args[2]);
            }
        } else if (name == "matrix" && args.size() == 6) {
            t = {args[0], args[1], args[2], args[3], args[4], args[5]};
        } else if (name == "skewX" || name == "skewY") {
            throw Error(ErrorCode::UnsupportedElement, fmt::format("transform {} is not supported", name));
        } else {
            throw Error(ErrorCode::InvalidArgument, fmt::format("unsupported transform '{}' with {} arguments", name, args.size()));
        }
        result = result * t;
    }
    if (!result.is_finite())
        throw Error(ErrorCode::InvalidArgument, "non-finite transform");
    return result;
}

CommandList shape_to_path(const FlatElement& el)
{
    auto degenerate = [&](std::string_view why) {
        return Error(ErrorCode::DegenerateShape, fmt::format("<{}> {}", el.name, why));
    };
    if (el.name == "rect") {
        const double x = required_number(el, "x", 0.0);
        const double y = required_number(el, "y", 0.0);
        const double w = required_number(el, "width", 0.0);
        const double h = required_number(el, "height", 0.0);
        if (w <= 0.0 || h <= 0.0)
            throw degenerate("has non-positive width or height");
        return {PathCommand::move_to({x, y}), PathCommand::line_to({x + w, y}), PathCommand::line_to({x + w, y + h}),
                PathCommand::line_to({x, y + h}), PathCommand::close()};
    }
    if (el.name == "circle") {
        const double r = required_number(el, "r", 0.0);
        if (r <= 0.0)
            throw degenerate("has non-positive radius");
        return ellipse_commands(required_number(el, "cx", 0.0), required_number(el, "cy", 0.0), r, r);
    }
    if (el.name == "ellipse") {
        const double rx = required_number(el, "rx", 0.0);
        const double ry = required_number(el, "ry", 0.0);
        if (rx <= 0.0 || ry <= 0.0)
            throw degenerate("has non-positive radius");
        return ellipse_commands(required_number(el, "cx", 0.0), required_number(el, "cy", 0.0), rx, ry);
    }
    if (el.name == "line") {
        return {PathCommand::move_to({required_number(el, "x1", 0.0), required_number(el, "y1", 0.0)}),
                PathCommand::line_to({required_number(el, "x2", 0.0), required_number(el, "y2", 0.0)})};
    }
    if (el.name == "polyline" || el.name == "polygon") {
        const std::string* pts = el.attribute("points");
        const std::vector<double> v = pts ? parse_number_list(*pts) : std::vector<double>{};
        if (v.size() < 4)
            throw degenerate("has fewer than two points");
        CommandList out;
        out.push_back(PathCommand::move_to({v[0], v[1]}));
        for (std::size_t i = 2; i + 1 < v.size(); i += 2)
            out.push_back(PathCommand::line_to({v[i], v[i + 1]}));
        if (el.name == "polygon")
            out.push_back(PathCommand::close());
        return out;
    }
    throw Error(ErrorCode::UnsupportedElement, fmt::format("<{}> is not a basic shape", el.name));
}

CommandList parse_path_data(std::string_view d) { return PathDataParser(d).parse(); }

std::optional<RgbColor> parse_color(std::string_view input)
{
    const std::string s = lower(trim(input));
    auto unknown = [&] { return Error(ErrorCode::UnknownColor, fmt::format("'{}'", input)); };
    if (s == "none")
        return std::nullopt;
    if (!s.empty() && s[0] == '#') {
        const std::string_view hex = std::string_view(s).substr(1);
        if (!std::all_of(hex.begin(), hex.end(), [](unsigned char c) { return std::isxdigit(c); }))
            throw unknown();
        auto nibble = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : c - 'a' + 10; };
        if (hex.size() == 3)
            return RgbColor::from_ints(nibble(hex[0]) * 17, nibble(hex[1]) * 17, nibble(hex[2]) * 17);
        if (hex.size() == 6) {
            return RgbColor::from_ints(nibble(hex[0]) * 16 + nibble(hex[1]), nibble(hex[2]) * 16 + nibble(hex[3]),
                                       nibble(hex[4]) * 16 + nibble(hex[5]));
        }
        throw unknown();
    }
    if (s.starts_with("rgb(") && s.back() == ')') {
        std::vector<double> v;
        try {
            v = parse_number_list(std::string_view(s).substr(4, s.size() - 5));
        } catch (const Error&) {
            throw unknown();
        }
        if (v.size() != 3)
            throw unknown();
        auto channel = [&](double x) {
            if (x != std::floor(x) || x < 0.0 || x > 255.0)
                throw unknown();
            return static_cast<int>(x);
        };
        return RgbColor::from_ints(channel(v[0]), channel(v[1]), channel(v[2]));
    }
    struct Named {
        std::string_view name;
        RgbColor color;
    };
    static constexpr std::array<Named, 18> named = {{
        {"black", {0, 0, 0}},        {"white", {255, 255, 255}}, {"red", {255, 0, 0}},
        {"green", {0, 128, 0}},      {"blue", {0, 0, 255}},      {"yellow", {255, 255, 0}},
        {"cyan", {0, 255, 255}},     {"aqua", {0, 255, 255}},    {"magenta", {255, 0, 255}},
        {"fuchsia", {255, 0, 255}},  {"gray", {128, 128, 128}},  {"silver", {192, 192, 192}},
        {"maroon", {128, 0, 0}},     {"olive", {128, 128, 0}},   {"lime", {0, 255, 0}},
        {"teal", {0, 128, 128}},     {"navy", {0, 0, 128}},      {"purple", {128, 0, 128}},
    }};
    for (const auto& n : named) {
        if (n.name == s)
            return n.color;
    }
    throw unknown();
}

SvgDocument parse_svg(std::string_view text)
{
    const XmlElement root = parse_xml(text);
    if (root.name != "svg")
        throw Error(ErrorCode::MalformedXml, fmt::format("root element is <{}>, expected <svg>", root.name));

    SvgDocument doc;
    if (const std::string* vb = root.attribute("viewBox")) {
        std::vector<double> v;
        try {
            v = parse_number_list(*vb);
        } catch (const Error&) {
            throw Error(ErrorCode::MissingViewbox, fmt::format("unparseable viewBox '{}'", *vb));
        }
        if (v.size() != 4 || !(v[2] > 0.0) || !(v[3] > 0.0))
            throw Error(ErrorCode::MissingViewbox, fmt::format("invalid viewBox '{}'", *vb));
        doc.viewbox = {v[0], v[1], v[2], v[3]};
    } else {
        const auto w = parse_length(root.attribute("width"));
        const auto h = parse_length(root.attribute("height"));
        if (!w || !h || !(*w > 0.0) || !(*h > 0.0))
            throw Error(ErrorCode::MissingViewbox, "neither viewBox nor positive width/height present");
        doc.viewbox = {0.0, 0.0, *w, *h};
    }

    bool warned_stroke = false;
    for (const FlatElement& el : flatten_groups(root)) {
        static constexpr std::array<std::string_view, 7> shapes = {"path", "rect", "circle", "ellipse",
                                                                   "line", "polyline", "polygon"};
        if (std::find(shapes.begin(), shapes.end(), el.name) == shapes.end())
            throw Error(ErrorCode::UnsupportedElement, fmt::format("<{}> at byte {}", el.name, el.offset));
        if (el.name == "rect") {
            for (std::string_view key : {"rx", "ry"}) {
                if (const std::string* r = el.attribute(key); r && parse_length(r).value_or(1.0) != 0.0)
                    throw Error(ErrorCode::UnsupportedElement, fmt::format("rounded <rect> at byte {}", el.offset));
            }
        }
        if (!warned_stroke) {
            for (const auto& [k, v] : el.attributes) {
                if (is_stroke_attribute(k) && v != "none") {
                    log::warn("stroke attributes are ignored (first at byte {})", el.offset);
                    warned_stroke = true;
                    break;
                }
            }
        }

        CommandList commands;
        if (el.name == "path") {
            const std::string* d = el.attribute("d");
            if (!d || trim(*d).empty()) {
                log::warn("<path> without data at byte {} skipped", el.offset);
                continue;
            }
            try {
                commands = parse_path_data(*d);
            } catch (const Error& e) {
                throw Error(ErrorCode::InvalidPathData,
                            fmt::format("in <path> at byte {}: {}", el.offset, e.what()));
            }
        } else {
            try {
                commands = shape_to_path(el);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegenerateShape)
                    throw;
                log::warn("{} skipped", e.what());
                continue;
            }
        }

        SvgPath path;
        path.commands = apply_affine(el.transform, commands);
        const std::string* fill = el.attribute("fill");
        path.fill_specified = fill != nullptr;
        if (fill) {
            try {
                path.fill = parse_color(*fill);
            } catch (const Error& e) {
                log::warn("{} at byte {}: path skipped", e.what(), el.offset);
                continue;
            }
        } else {
            path.fill = RgbColor{0, 0, 0};
        }
        if (const std::string* rule = el.attribute("fill-rule"))
            path.fill_rule = trim(*rule) == "evenodd" ? FillRule::EvenOdd : FillRule::NonZero;
        if (!is_well_formed(path.commands))
            throw Error(ErrorCode::InvalidPathData, fmt::format("non-finite geometry at byte {}", el.offset));
        doc.paths.push_back(std::move(path));
    }
    return doc;
}

std::string format_number(double v)
{
    std::string s = fmt::format("{:.3f}", v);
    while (!s.empty() && s.back() == '0')
        s.pop_back();
    if (!s.empty() && s.back() == '.')
        s.pop_back();
    if (s == "-0")
        s = "0";
    return s;
}

std::string format_path_data(std::span<const PathCommand> commands)
{
    std::string out;
    auto pt = [&](Point p) {
        out += format_number(p.x);
        out += ' ';
        out += format_number(p.y);
    };
    for (const auto& cmd : commands) {
        switch (cmd.kind) {
        case CommandKind::MoveTo:
            out += 'M';
            pt(cmd.pts[0]);
            break;
        case CommandKind::LineTo:
            out += 'L';
            pt(cmd.pts[0]);
            break;
        case CommandKind::CubicTo:
            out += 'C';
            pt(cmd.pts[0]);
            out += ' ';
            pt(cmd.pts[1]);
            out += ' ';
            pt(cmd.pts[2]);
            break;
        case CommandKind::ClosePath: out += 'Z'; break;
        }
    }
    return out;
}

std::string format_color(const RgbColor& c) { return fmt::format("#{:02x}{:02x}{:02x}", c.r, c.g, c.b); }

std::string serialize_svg(const SvgDocument& doc)
{
    const auto& vb = doc.viewbox;
    std::string out = fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">)",
                                  format_number(vb.min_x), format_number(vb.min_y), format_number(vb.width),
                                  format_number(vb.height));
    if (!doc.paths.empty())
        out += '\n';
    for (const auto& path : doc.paths) {
        out += fmt::format(R"(<path d="{}" fill="{}")", format_path_data(path.commands),
                           path.fill ? format_color(*path.fill) : std::string("none"));
        if (path.fill_rule == FillRule::EvenOdd)
            out += R"( fill-rule="evenodd")";
        out += "/>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace svgforge

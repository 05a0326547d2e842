#include "svgforge/error.hpp"
#include "svgforge/log.hpp"
#include "svgforge/raster.hpp"
#include "svgforge/svg.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace svgforge;

namespace {

CommandList rect_cmds()
{
    return {PathCommand::move_to({10, 10}), PathCommand::line_to({30, 10}), PathCommand::line_to({30, 30}),
            PathCommand::line_to({10, 30}), PathCommand::close()};
}

const char* kRect = R"~(<svg viewBox="0 0 100 100"><rect x="10" y="10" width="20" height="20" fill="#ff0000"/></svg>)~";

} // namespace

TEST_CASE("parse rect")
{
    const SvgDocument doc = parse_svg(kRect);
    REQUIRE(doc.paths.size() == 1);
    CHECK(doc.paths[0].commands == rect_cmds());
    CHECK(doc.paths[0].fill == RgbColor{255, 0, 0});
    CHECK(doc.viewbox == ViewBox{0, 0, 100, 100});
}

TEST_CASE("parse empty and grouped documents")
{
    CHECK(parse_svg(R"~(<svg viewBox="0 0 100 100"/>)~").paths.empty());
    const SvgDocument doc = parse_svg(
        R"~(<svg viewBox="0 0 100 100"><g fill="#00ff00" transform="translate(5,0)"><path d="M0 0 L10 0"/></g></svg>)~");
    REQUIRE(doc.paths.size() == 1);
    CHECK(doc.paths[0].commands == CommandList{PathCommand::move_to({5, 0}), PathCommand::line_to({15, 0})});
    CHECK(doc.paths[0].fill == RgbColor{0, 255, 0});
}

TEST_CASE("group attribute inheritance and transforms")
{
    auto one = [](const char* body) {
        const SvgDocument d = parse_svg(std::string(R"~(<svg viewBox="0 0 100 100">)~") + body + "</svg>");
        REQUIRE(d.paths.size() == 1);
        return d.paths[0];
    };
    CHECK(one(R"~(<g fill="red"><path d="M0 0L1 0L1 1Z"/></g>)~").fill == RgbColor{255, 0, 0});
    CHECK(one(R"~(<g fill="red"><path d="M0 0L1 0L1 1Z" fill="blue"/></g>)~").fill == RgbColor{0, 0, 255});
    const SvgPath p = one(R"~(<g transform="translate(1,0)"><g transform="scale(2)"><path d="M3 4L5 6"/></g></g>)~");
    CHECK(p.commands[0].pts[0] == Point{7, 8});
    CHECK(p.commands[1].pts[0] == Point{11, 12});
}

TEST_CASE("basic shapes")
{
    const SvgDocument circle =
        parse_svg(R"~(<svg viewBox="0 0 100 100"><circle cx="50" cy="50" r="10" fill="#000"/></svg>)~");
    REQUIRE(circle.paths.size() == 1);
    int cubics = 0;
    for (const auto& c : circle.paths[0].commands)
        cubics += c.kind == CommandKind::CubicTo ? 1 : 0;
    CHECK(cubics == 4);
    const MaskBitmap m = rasterize_path(circle.paths[0].commands, 1000, 1000, FillRule::NonZero, {0, 0, 100, 100});
    const double area = static_cast<double>(mask_area(m)) / 100.0; // 10 px per unit
    CHECK(std::abs(area - std::numbers::pi * 100) / (std::numbers::pi * 100) < 0.002);

    const SvgDocument line = parse_svg(R"~(<svg viewBox="0 0 100 100"><line x1="0" y1="0" x2="5" y2="5"/></svg>)~");
    CHECK(line.paths[0].commands == CommandList{PathCommand::move_to({0, 0}), PathCommand::line_to({5, 5})});
    const SvgDocument poly = parse_svg(R"~(<svg viewBox="0 0 100 100"><polygon points="0,0 10,0 5,8"/></svg>)~");
    CHECK(poly.paths[0].commands == CommandList{PathCommand::move_to({0, 0}), PathCommand::line_to({10, 0}),
                                                PathCommand::line_to({5, 8}), PathCommand::close()});
}

TEST_CASE("path data")
{
    CHECK(parse_path_data("M 0 0 h 10 v 5 z") ==
          CommandList{PathCommand::move_to({0, 0}), PathCommand::line_to({10, 0}), PathCommand::line_to({10, 5}),
                      PathCommand::close()});
    const CommandList q = parse_path_data("M 0 0 Q 5 10 10 0");
    REQUIRE(q.size() == 2);
    CHECK(q[1].kind == CommandKind::CubicTo);
    CHECK(q[1].pts[0].x == doctest::Approx(10.0 / 3));
    CHECK(q[1].pts[0].y == doctest::Approx(20.0 / 3));
    CHECK(q[1].pts[1].x == doctest::Approx(20.0 / 3));
    CHECK(q[1].pts[1].y == doctest::Approx(20.0 / 3));
    CHECK(parse_path_data("M 0 0") == CommandList{PathCommand::move_to({0, 0})});
    CHECK(parse_path_data("M1 2 3 4") == CommandList{PathCommand::move_to({1, 2}), PathCommand::line_to({3, 4})});
    CHECK(parse_path_data("m1 1l2 0").back().pts[0] == Point{3, 1});
    CHECK(parse_path_data("M0 0A5 5 0 0110 0").back().kind == CommandKind::CubicTo);
    CHECK(parse_path_data("M0 0C0 1 1 1 1 0S2 -1 2 0").size() == 3);
    CHECK_THROWS_AS(parse_path_data("L 1 1"), Error);
    CHECK_THROWS_AS(parse_path_data("M 0 0 L 1"), Error);
    CHECK_THROWS_AS(parse_path_data("M 0 0 X 1 1"), Error);
}

TEST_CASE("colors")
{
    CHECK(parse_color("#ff0000") == RgbColor{255, 0, 0});
    CHECK(parse_color("#0f0") == RgbColor{0, 255, 0});
    CHECK_FALSE(parse_color("none").has_value());
    CHECK(parse_color("rgb(1, 2, 3)") == RgbColor{1, 2, 3});
    CHECK(parse_color("white") == RgbColor{255, 255, 255});
    CHECK_THROWS_AS(parse_color("chartreuse-ish"), Error);
}

TEST_CASE("error codes")
{
    auto code_of = [](const char* text) {
        try {
            parse_svg(text);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    CHECK(code_of("<svg viewBox='0 0 1 1'><path d='M0 0'>") == ErrorCode::MalformedXml);
    CHECK(code_of("<svg viewBox='0 0 1 1'><text>hi</text></svg>") == ErrorCode::UnsupportedElement);
    CHECK(code_of("<svg><path d='M0 0L1 1'/></svg>") == ErrorCode::MissingViewbox);
    CHECK(code_of("<svg viewBox='0 0 1 1'><path d='M0 0L'/></svg>") == ErrorCode::InvalidPathData);
    CHECK(code_of("<svg viewBox='0 0 1 1'><rect width='5' height='5' rx='1'/></svg>") ==
          ErrorCode::UnsupportedElement);
}

TEST_CASE("skipped content warns")
{
    std::vector<std::string> messages;
    log::set_sink([&](log::Level, const std::string& m) { messages.push_back(m); });
    const SvgDocument doc = parse_svg(R"~(<svg viewBox="0 0 100 100"><rect width="0" height="5"/>)~"
                                      R"~(<path d="M0 0L1 1Z" fill="octarine"/><path d="M0 0L1 0L1 1Z"/></svg>)~");
    log::set_sink({});
    CHECK(doc.paths.size() == 1);
    CHECK(messages.size() >= 2);
}

TEST_CASE("serialization")
{
    const std::string text = serialize_svg(parse_svg(kRect));
    CHECK(text.find(R"~(d="M10 10L30 10L30 30L10 30Z")~") != std::string::npos);
    CHECK(text.find(R"~(fill="#ff0000")~") != std::string::npos);
    const std::string empty = serialize_svg(SvgDocument{});
    CHECK(empty.find(R"~(viewBox="0 0 100 100")~") != std::string::npos);
    CHECK(empty.find("</svg>") != std::string::npos);

    const char* messy = R"~(<svg viewBox="0 0 100 100"><g transform="rotate(17 50 50)" fill="#123456">)~"
                        R"~(<circle cx="40" cy="40" r="13.3333"/><path d="M1 1Q20 40 60 2T90 90z" fill-rule="evenodd"/>)~"
                        R"~(</g></svg>)~";
    const std::string once = serialize_svg(parse_svg(messy));
    const std::string twice = serialize_svg(parse_svg(once));
    CHECK(once == twice);
    CHECK(format_number(-0.0001) == "0");
    CHECK(format_number(1.5) == "1.5");
}

#include "svgforge/error.hpp"
#include "svgforge/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace svgforge {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::UnsupportedElement: return "UnsupportedElement";
    case ErrorCode::MissingViewbox: return "MissingViewbox";
    case ErrorCode::InvalidPathData: return "InvalidPathData";
    case ErrorCode::UnknownColor: return "UnknownColor";
    case ErrorCode::DegenerateShape: return "DegenerateShape";
    case ErrorCode::EmptyPath: return "EmptyPath";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DegeneratePath: return "DegeneratePath";
    case ErrorCode::UnknownComponent: return "UnknownComponent";
    case ErrorCode::NonRootComponent: return "NonRootComponent";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::EmptyLibrary: return "EmptyLibrary";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::GrammarViolation: return "GrammarViolation";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TokenOutOfRange: return "TokenOutOfRange";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::SequenceTooLong: return "SequenceTooLong";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::VocabularyMismatch: return "VocabularyMismatch";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

namespace log {

namespace {

std::mutex g_mutex;
std::atomic<Level> g_level{Level::Warn};

Sink& sink_ref()
{
    static Sink sink = [](Level lvl, const std::string& msg) {
        const char* tag = lvl == Level::Error ? "error" : lvl == Level::Warn ? "warning" : "info";
        std::cerr << "[svgforge] " << tag << ": " << msg << '\n';
    };
    return sink;
}

} // namespace

void set_sink(Sink sink)
{
    std::lock_guard lock(g_mutex);
    sink_ref() = std::move(sink);
}

void set_level(Level lvl) { g_level.store(lvl); }

Level level() { return g_level.load(); }

void write(Level lvl, const std::string& message)
{
    std::lock_guard lock(g_mutex);
    if (sink_ref())
        sink_ref()(lvl, message);
}

} // namespace log

} // namespace svgforge

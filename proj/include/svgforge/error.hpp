#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace svgforge {

enum class ErrorCode {
    MalformedXml,
    UnsupportedElement,
    MissingViewbox,
    InvalidPathData,
    UnknownColor,
    DegenerateShape,
    EmptyPath,
    DimensionMismatch,
    IoError,
    DegeneratePath,
    UnknownComponent,
    NonRootComponent,
    FormatVersionMismatch,
    EmptyLibrary,
    NonPositiveScale,
    UnknownCategory,
    GrammarViolation,
    InvalidConfig,
    TokenOutOfRange,
    EmptyMask,
    SequenceTooLong,
    VersionMismatch,
    VocabularyMismatch,
    EmptyDocument,
    InvalidSpec,
    EmptyInput,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception type used throughout the library. `code()` identifies the
/// failure class; `what()` carries a human-readable description.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace svgforge

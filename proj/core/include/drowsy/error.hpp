#pragma once

#include <stdexcept>
#include <string>

namespace drowsy {

enum class ErrorCode {
    InvalidArgument,
    MalformedHeader,
    TruncatedRaster,
    UnsupportedMaxval,
    OutOfBounds,
    EmptyInput,
    NoFeatures,
    ImageTooSmall,
    ParseError,
    VersionMismatch,
    WrongDimensions,
    DegenerateData,
    BadK,
    DimensionMismatch,
    SingleClass,
    NonFinite,
    TooFewSamples,
    BadLabel,
    MissingFile,
    EmptyManifest,
    IoError,
    NoFacesFound,
    ModelMismatch,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI's exit-code mapping) can branch on it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace drowsy

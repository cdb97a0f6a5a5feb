#include "drowsy/error.hpp"

namespace drowsy {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::TruncatedRaster: return "TruncatedRaster";
        case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::NoFeatures: return "NoFeatures";
        case ErrorCode::ImageTooSmall: return "ImageTooSmall";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::WrongDimensions: return "WrongDimensions";
        case ErrorCode::DegenerateData: return "DegenerateData";
        case ErrorCode::BadK: return "BadK";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::BadLabel: return "BadLabel";
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::EmptyManifest: return "EmptyManifest";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::NoFacesFound: return "NoFacesFound";
        case ErrorCode::ModelMismatch: return "ModelMismatch";
    }
    return "Unknown";
}

}  // namespace drowsy

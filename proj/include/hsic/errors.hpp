#pragma once

#include <stdexcept>
#include <string>

namespace hsic {

enum class ErrorCode {
    MissingFile,
    MalformedHeader,
    SizeMismatch,
    NonFiniteValue,
    LabelOutOfRange,
    EmptyClass,
    BadRatios,
    KTooLarge,
    DimensionMismatch,
    CoordinateOutOfRange,
    EvenPatch,
    EmptySubset,
    ShapeMismatch,
    KernelTooLarge,
    CountMismatch,
    NotScalar,
    AlreadyBackpropagated,
    PatchTooSmall,
    NegativeExtent,
    DivergedLoss,
    LengthMismatch,
    EmptyMatrix,
    DegenerateMarginals,
    ConfigError,
    ManifestMismatch,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::SizeMismatch: return "SizeMismatch";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::EmptyClass: return "EmptyClass";
        case ErrorCode::BadRatios: return "BadRatios";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::CoordinateOutOfRange: return "CoordinateOutOfRange";
        case ErrorCode::EvenPatch: return "EvenPatch";
        case ErrorCode::EmptySubset: return "EmptySubset";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::KernelTooLarge: return "KernelTooLarge";
        case ErrorCode::CountMismatch: return "CountMismatch";
        case ErrorCode::NotScalar: return "NotScalar";
        case ErrorCode::AlreadyBackpropagated: return "AlreadyBackpropagated";
        case ErrorCode::PatchTooSmall: return "PatchTooSmall";
        case ErrorCode::NegativeExtent: return "NegativeExtent";
        case ErrorCode::DivergedLoss: return "DivergedLoss";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::DegenerateMarginals: return "DegenerateMarginals";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    }
    return "Unknown";
}

}  // namespace hsic

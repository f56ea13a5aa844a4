#pragma once

#include <stdexcept>
#include <string>

namespace softcon {

/// Failure categories surfaced by the library. The CLI maps these to exit codes.
enum class ErrorKind {
    NotPositiveDefinite,
    DimensionMismatch,
    WeightsNotNormalized,
    EvaluationError,
    AllWeightsZero,
    SingularInnovation,
    UnknownPreset,
    ConfigError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// True for failures of the numerics rather than of the inputs.
    bool is_numerical() const noexcept {
        return kind_ == ErrorKind::AllWeightsZero || kind_ == ErrorKind::SingularInnovation ||
               kind_ == ErrorKind::NotPositiveDefinite;
    }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::WeightsNotNormalized: return "WeightsNotNormalized";
        case ErrorKind::EvaluationError: return "EvaluationError";
        case ErrorKind::AllWeightsZero: return "AllWeightsZero";
        case ErrorKind::SingularInnovation: return "SingularInnovation";
        case ErrorKind::UnknownPreset: return "UnknownPreset";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace softcon

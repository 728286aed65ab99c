#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sparsetde {

enum class ErrorCode {
    InvalidArgument,
    InvalidSignal,
    DimensionMismatch,
    ZeroVariance,
    LagOutOfRange,
    DegenerateGrid,
    NonConvergence,
    EmptyPath,
    AllZeroReconstruction,
    InsufficientOverlap,
    TooShort,
    Empty,
    NonPositiveAmount,
    EmptySupport,
    Parse,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidSignal: return "InvalidSignal";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::LagOutOfRange: return "LagOutOfRange";
        case ErrorCode::DegenerateGrid: return "DegenerateGrid";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::EmptyPath: return "EmptyPath";
        case ErrorCode::AllZeroReconstruction: return "AllZeroReconstruction";
        case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::Empty: return "Empty";
        case ErrorCode::NonPositiveAmount: return "NonPositiveAmount";
        case ErrorCode::EmptySupport: return "EmptySupport";
        case ErrorCode::Parse: return "Parse";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// batch drivers can record a reason without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised by the LASSO solver; remembers the penalty at which it gave up.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(double lambda, std::size_t iterations, const std::string& solver = "coordinate descent",
                        const std::string& unit = "sweeps")
        : Error(ErrorCode::NonConvergence,
                solver + " did not converge after " + std::to_string(iterations) + " " + unit +
                    " at lambda = " + std::to_string(lambda)),
          lambda_(lambda) {}

    [[nodiscard]] double lambda() const noexcept { return lambda_; }

private:
    double lambda_;
};

}  // namespace sparsetde

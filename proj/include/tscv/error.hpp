#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tscv {

/// Failure categories shared by every module. The CLI maps these onto exit codes.
enum class ErrorCode {
    TooFewPoints,
    NonFiniteInput,
    BadParameters,
    PointNotInScale,
    DomainTooSmall,
    SyntaxError,
    UnknownIdentifier,
    UnboundVariable,
    DomainError,
    ValidationError,
    TrajectoryDomainError,
    EndpointNotFree,
    NoPointBeyondB,
    ScaleKindMismatch,
    FlavorMismatch,
    ScaleMismatch,
    NotDualizable,
    SearchSpaceTooLarge,
    EmptyFeasibleSet,
    IoError,
    ParseError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Parse failure inside an expression; `position` is a 0-based character offset.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, const std::string& message)
        : Error(ErrorCode::SyntaxError,
                "syntax error at position " + std::to_string(position) + ": " + message),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

}  // namespace tscv

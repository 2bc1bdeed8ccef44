#include "tscv/format.hpp"

#include <charconv>
#include <cstdio>

#include "tscv/error.hpp"

namespace tscv {

std::string format_double(double value) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(n));
}

std::string format_shortest(double value) {
    char buf[40];
    const auto result = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, result.ptr);
}

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::BadParameters: return "BadParameters";
        case ErrorCode::PointNotInScale: return "PointNotInScale";
        case ErrorCode::DomainTooSmall: return "DomainTooSmall";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
        case ErrorCode::UnboundVariable: return "UnboundVariable";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::TrajectoryDomainError: return "TrajectoryDomainError";
        case ErrorCode::EndpointNotFree: return "EndpointNotFree";
        case ErrorCode::NoPointBeyondB: return "NoPointBeyondB";
        case ErrorCode::ScaleKindMismatch: return "ScaleKindMismatch";
        case ErrorCode::FlavorMismatch: return "FlavorMismatch";
        case ErrorCode::ScaleMismatch: return "ScaleMismatch";
        case ErrorCode::NotDualizable: return "NotDualizable";
        case ErrorCode::SearchSpaceTooLarge: return "SearchSpaceTooLarge";
        case ErrorCode::EmptyFeasibleSet: return "EmptyFeasibleSet";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

}  // namespace tscv

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace agfit {

enum class ErrorCode {
    self_loop,
    multi_edge,
    condition_one_violated,
    condition_two_violated,
    unknown_vertex,
    invalid_coding,
    overlapping_sets,
    empty_set,
    not_positive_definite,
    singular_matrix,
    dimension_mismatch,
    singular_design,
    not_maximal,
    max_iterations_exceeded,
    invalid_df,
    vertex_limit_exceeded,
    parse_error,
    label_mismatch,
    invalid_argument,
};

inline const char* to_string(ErrorCode code)
{
    switch (code) {
        case ErrorCode::self_loop: return "SelfLoop";
        case ErrorCode::multi_edge: return "MultiEdge";
        case ErrorCode::condition_one_violated: return "ConditionOneViolated";
        case ErrorCode::condition_two_violated: return "ConditionTwoViolated";
        case ErrorCode::unknown_vertex: return "UnknownVertex";
        case ErrorCode::invalid_coding: return "InvalidCoding";
        case ErrorCode::overlapping_sets: return "OverlappingSets";
        case ErrorCode::empty_set: return "EmptySet";
        case ErrorCode::not_positive_definite: return "NotPositiveDefinite";
        case ErrorCode::singular_matrix: return "SingularMatrix";
        case ErrorCode::dimension_mismatch: return "DimensionMismatch";
        case ErrorCode::singular_design: return "SingularDesign";
        case ErrorCode::not_maximal: return "NotMaximal";
        case ErrorCode::max_iterations_exceeded: return "MaxIterationsExceeded";
        case ErrorCode::invalid_df: return "InvalidDf";
        case ErrorCode::vertex_limit_exceeded: return "VertexLimitExceeded";
        case ErrorCode::parse_error: return "ParseError";
        case ErrorCode::label_mismatch: return "LabelMismatch";
        case ErrorCode::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Single exception type for the library. The code identifies the failure
/// class; vertex (when set) names the offending vertex index.
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::size_t> vertex = std::nullopt)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code),
          vertex_(vertex)
    {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> vertex() const noexcept { return vertex_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> vertex_;
};

/// Parse failure carrying a 1-based source position.
class ParseError : public Error
{
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : Error(ErrorCode::parse_error,
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
          line_(line),
          column_(column)
    {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

} // namespace agfit

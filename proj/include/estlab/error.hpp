#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace estlab {

enum class ErrorKind {
    InvalidParameter,
    InvalidDesign,
    Dimension,
    SingularModel,
    DegenerateFilter,
    EvaluationFailure,
    InvalidConfig,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::InvalidDesign: return "invalid-design";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::SingularModel: return "singular-model";
    case ErrorKind::DegenerateFilter: return "degenerate-filter";
    case ErrorKind::EvaluationFailure: return "evaluation-failure";
    case ErrorKind::InvalidConfig: return "invalid-config";
    }
    return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit code without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Configuration problem tied to a named field.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(ErrorKind::InvalidConfig, field + ": " + what), field_(std::move(field))
    {
    }

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace estlab

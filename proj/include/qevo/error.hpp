#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qevo {

/// Base of every error the library raises. Callers that only need a message
/// can catch this; the subclasses carry the machine-readable details.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// market data
class MalformedRow : public Error {
public:
    MalformedRow(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class OhlcViolation : public Error {
public:
    OhlcViolation(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class DuplicateDate : public Error {
public:
    using Error::Error;
};

class EmptyIntersection : public Error {
public:
    using Error::Error;
};

class EmptySplit : public Error {
public:
    using Error::Error;
};

// strategy programs
class ProgramError : public Error {
public:
    using Error::Error;
};

class SyntaxError : public ProgramError {
public:
    SyntaxError(std::size_t line, std::size_t column, const std::string& message)
        : ProgramError(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          line_(line), column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class UnknownIndicator : public ProgramError {
public:
    using ProgramError::ProgramError;
};

class UnboundReference : public ProgramError {
public:
    using ProgramError::ProgramError;
};

class ParamOutOfRange : public ProgramError {
public:
    using ProgramError::ProgramError;
};

class UnknownTag : public ProgramError {
public:
    using ProgramError::ProgramError;
};

/// Raised while evaluating a rule, e.g. a division by zero. `rule_path`
/// names the offending node ("entry/lhs/rhs").
class EvaluationError : public Error {
public:
    EvaluationError(std::string rule_path, const std::string& what)
        : Error(rule_path + ": " + what), rule_path_(std::move(rule_path)) {}
    const std::string& rule_path() const noexcept { return rule_path_; }

private:
    std::string rule_path_;
};

/// A backtest that could not complete; the candidate is scored as failed.
class CandidateFailure : public Error {
public:
    using Error::Error;
};

// metrics
class MetricError : public Error {
public:
    using Error::Error;
};

class DegenerateSeries : public MetricError {
public:
    using MetricError::MetricError;
};

class NoDownside : public MetricError {
public:
    using MetricError::MetricError;
};

class ZeroTrackingError : public MetricError {
public:
    using MetricError::MetricError;
};

class InvalidMetrics : public MetricError {
public:
    using MetricError::MetricError;
};

// feature map
class NonFiniteValue : public Error {
public:
    using Error::Error;
};

class UnknownDimension : public Error {
public:
    using Error::Error;
};

// evolution
class EmptyIsland : public Error {
public:
    using Error::Error;
};

class SeedBacktestFailure : public Error {
public:
    using Error::Error;
};

class GenerationFailure : public Error {
public:
    using Error::Error;
};

class MalformedHypothesis : public GenerationFailure {
public:
    using GenerationFailure::GenerationFailure;
};

class EndpointError : public Error {
public:
    using Error::Error;
};

class CorruptCheckpoint : public Error {
public:
    using Error::Error;
};

class ConfigMismatch : public Error {
public:
    using Error::Error;
};

class NoValidCandidate : public Error {
public:
    using Error::Error;
};

/// Configuration problem; `key` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace qevo

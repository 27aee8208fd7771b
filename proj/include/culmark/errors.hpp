#pragma once

#include <stdexcept>
#include <string>

namespace culmark {

/// Precondition failure on an argument (unknown id, empty input, g = 0, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An edit outside the permitted [1, 24] changed-pixel range.
class ConstraintViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A popularity-dependent policy was asked to act on a view without popularity.
class PolicyUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A metric is mathematically undefined for the given input
/// (fewer than two market entries, zero-norm vectors, all-zero counts, zero variance).
class DegenerateInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Configuration problem. `key()` names the offending key when there is one.
class ConfigError : public std::runtime_error {
public:
    enum class Kind { MissingFile, Parse, Invalid };

    ConfigError(std::string key, const std::string& what, Kind kind = Kind::Invalid)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)), kind_(kind) {}
    const std::string& key() const noexcept { return key_; }
    Kind kind() const noexcept { return kind_; }

private:
    std::string key_;
    Kind kind_;
};

/// Malformed input file. `line()` is 1-based, 0 when not line-specific.
class DataFormatError : public std::runtime_error {
public:
    DataFormatError(std::string source, std::size_t line, const std::string& what)
        : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Broken internal invariant (a bug, not bad input).
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace culmark

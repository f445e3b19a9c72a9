#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace comogcn {

/// Malformed annotation input. Carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DuplicateRecordError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters, unknown dataset names, empty training sets.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shape mismatch, non-finite input, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Serialized artifact (window cache, labels, checkpoint) failed validation.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace comogcn

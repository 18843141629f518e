#pragma once

#include <stdexcept>
#include <string>

namespace agentsim {

// Base for all library errors. exit_code() is what the CLI returns when the
// error escapes: 1 for validation/config problems, 2 for I/O problems.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual int exit_code() const { return 1; }
};

// Malformed input that could not be parsed at all. Carries a 1-based line
// number when the source is line-oriented (0 when not applicable).
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that violates a named invariant.
class ValidationError : public Error {
public:
    ValidationError(const std::string& invariant, const std::string& detail)
        : Error(invariant + ": " + detail), invariant_(invariant) {}
    const std::string& invariant() const { return invariant_; }

private:
    std::string invariant_;
};

// Bad configuration (subtask maps, optimization configs, fixtures, policies).
class ConfigError : public Error {
public:
    using Error::Error;
};

// File system / stream trouble.
class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

// A trace references a tool the subtask map does not cover.
class MappingError : public Error {
public:
    using Error::Error;
};

// Declared subtask dependencies contain a cycle; message lists the cycle path.
class CycleError : public Error {
public:
    using Error::Error;
};

// Invoking a terminated session, mismatched task ids, and similar misuse.
class SessionError : public Error {
public:
    using Error::Error;
};

}  // namespace agentsim

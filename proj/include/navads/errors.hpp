#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace navads {

// Base for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration: invalid config file, invalid parameter combinations.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Bad input data: invariant violations, schema violations, missing records.
class DataError : public Error {
public:
    using Error::Error;
};

// Malformed input at a known line of a line-delimited stream (1-based).
class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& message)
        : DataError("line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Transport or protocol failure talking to a model endpoint. `attempts` is
// the total number of attempts made (retries included) when known.
class GatewayError : public Error {
public:
    explicit GatewayError(const std::string& message, int attempts = 0)
        : Error(message), attempts_(attempts) {}

    int attempts() const { return attempts_; }

private:
    int attempts_;
};

// A cache entry exists on disk but cannot be used (truncated, inconsistent,
// or written by an incompatible format version). Distinct from not-found.
class CacheError : public Error {
public:
    using Error::Error;
};

}  // namespace navads

#pragma once

#include <stdexcept>
#include <string>

namespace cqda {

// User-facing failures (bad input, bad config, missing files). The CLI maps
// these to exit code 1; everything else (NumericError, std::*) maps to 2.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (byte " + std::to_string(byte_offset) + ")"), offset(byte_offset) {}
    std::size_t offset;
};

struct VocabError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ContractError : Error {
    using Error::Error;
};

struct BudgetError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Internal numeric failure (non-finite loss, NaN score). Not a user error.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cqda

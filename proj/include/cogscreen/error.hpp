#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cogscreen {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input data (malformed files, dangling references, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid arguments or configuration supplied by the caller.
class UsageError : public Error {
public:
    using Error::Error;
};

/// A lookup by identifier found nothing.
class NotFoundError : public DataError {
public:
    using DataError::DataError;
};

/// Regex failed to compile; offset is the code-point position in the source.
class RegexError : public Error {
public:
    RegexError(const std::string& message, std::size_t offset)
        : Error(message + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// An external scorer failed (transport, timeout, malformed body).
class ScorerError : public Error {
public:
    using Error::Error;
};

}  // namespace cogscreen

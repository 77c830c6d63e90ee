#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hessgan {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments passed to an operation (bad sizes, non-positive widths...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Network/config dimensions that do not fit together.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A NaN or Inf appeared where a finite value is required.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents; carries the byte offset where parsing stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace hessgan

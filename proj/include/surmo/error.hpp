#pragma once

#include <stdexcept>
#include <string>

namespace surmo {

// Base for all errors thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A referenced file does not exist or cannot be opened.
struct FileNotFoundError : Error {
    explicit FileNotFoundError(const std::string& msg) : Error(msg) {}
};

// Malformed file contents: bad magic, version, truncation, checksum.
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Contract violation on an in-memory API: shape mismatch, bad argument.
struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

// Numerical failure at runtime (e.g. NaN loss during training).
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace surmo

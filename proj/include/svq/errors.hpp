#pragma once

#include <stdexcept>
#include <string>

namespace svq {

// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// File system / OS level failures (missing file, short write, ...).
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed or corrupt data: bad magic, truncated stream, CRC mismatch,
// codebook hash mismatch, out-of-range field.
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

} // namespace svq

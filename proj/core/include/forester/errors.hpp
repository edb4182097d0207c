#pragma once

#include <stdexcept>
#include <string>

namespace forester {

// Malformed input files (ragged CSV rows, bad archives, bad JSON).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Semantically invalid data or configuration (unknown column, degenerate
// target, out-of-range thresholds).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures, always carrying the offending path.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace forester

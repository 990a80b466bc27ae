#pragma once

#include <stdexcept>
#include <string>

namespace xtalk {

/// Malformed input file (device file, calibration table, ...).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// A structural invariant was violated; the message names the offending field.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A fit did not converge or its residual exceeded the configured threshold.
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace xtalk

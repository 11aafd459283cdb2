#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace robustgen {

// Invalid parameters or mismatched dimensions passed to an operation.
class InvalidConfigError : public std::runtime_error {
public:
    explicit InvalidConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file. Carries the offending path and byte offset.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& path, std::size_t offset, const std::string& what)
        : std::runtime_error(path + " @" + std::to_string(offset) + ": " + what),
          path_(path),
          offset_(offset) {}

    const std::string& path() const { return path_; }
    std::size_t offset() const { return offset_; }

private:
    std::string path_;
    std::size_t offset_;
};

// Iterative method failed to converge. Carries the last iterate's value.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_estimate)
        : std::runtime_error(what), last_estimate_(last_estimate) {}

    double last_estimate() const { return last_estimate_; }

private:
    double last_estimate_;
};

// Non-finite values or an unrecoverable numerical failure.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite loss. Carries the epoch index.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t epoch)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

// Request exceeds a hard resource cap (e.g. exact enumeration size).
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace robustgen

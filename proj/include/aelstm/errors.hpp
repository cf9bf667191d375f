#pragma once

#include <stdexcept>
#include <string>

namespace aelstm {

// Error taxonomy used across the library. All derive from the standard
// exception hierarchy so generic catch sites keep working.

struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Operation called in an order the API forbids (e.g. backward before forward).
struct StateError : std::logic_error {
    explicit StateError(const std::string& what) : std::logic_error(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct DeterminismError : std::runtime_error {
    explicit DeterminismError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// A pipeline stage was invoked before the artifacts it consumes exist.
struct DependencyError : std::runtime_error {
    explicit DependencyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace aelstm

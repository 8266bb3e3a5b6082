#pragma once

#include <stdexcept>
#include <string>

namespace hybridspec {

/// Invalid parameters, malformed configuration or schema violations.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite results, singular systems, solver non-convergence.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing files, unreadable input, failed writes.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hybridspec

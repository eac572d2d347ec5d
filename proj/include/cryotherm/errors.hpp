#pragma once

#include <stdexcept>
#include <string>

namespace cryotherm {

/// Physical parameter set violates an invariant (negative mass, impossible coupling, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration object or configuration file is unusable.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input data cannot be analyzed (too short, degenerate, mismatched grids).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File content does not follow the expected on-disk format.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cryotherm

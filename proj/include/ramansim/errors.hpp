#pragma once

#include <stdexcept>
#include <string>

namespace ramansim {

// Error categories; the CLI maps them to exit codes
// (config = 2, numerics = 3, io = 4).

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ramansim

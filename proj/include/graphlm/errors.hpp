#pragma once
#include <stdexcept>
#include <string>

namespace graphlm {

// Bad data or bad arguments supplied by the caller/operator.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent dimensions, malformed config, or mismatched checkpoints.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace graphlm

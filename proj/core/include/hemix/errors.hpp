#pragma once

#include <stdexcept>

namespace hemix {

// Bad configuration detected at load or model-build time.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A sample or dataset violates its schema.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A metric is undefined for the given inputs (e.g. single-class AUC).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hemix

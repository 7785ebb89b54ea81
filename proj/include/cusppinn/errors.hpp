#pragma once

#include <stdexcept>
#include <string>

namespace cusppinn {

/// Invalid configuration: bad layer sizes, unknown example id, malformed run config.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Contract violation: input dimension does not match what the callee expects.
struct dimension_error : std::invalid_argument {
    explicit dimension_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Degenerate geometry: point on the interface, vanishing level-set gradient,
/// or a sampler that cannot place points inside the stated domain.
struct geometry_error : std::runtime_error {
    explicit geometry_error(const std::string& what) : std::runtime_error(what) {}
};

/// Surface sampling failure (e.g. Newton projection did not converge).
struct sampling_error : std::runtime_error {
    explicit sampling_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: divergent training run, degenerate normalizer.
struct numerics_error : std::runtime_error {
    explicit numerics_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cusppinn

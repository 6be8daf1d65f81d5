#pragma once

#include <stdexcept>
#include <string>

namespace skflow {

/// Argument outside the path's time domain [0, T].
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dimension or horizon mismatch between operands.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Time warp violates strict monotonicity or boundary conditions.
class InvalidWarpError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input outside the scope of an exact algorithm (caller must fall back
/// to the bound-producing variant).
class UnsupportedInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A user coefficient failed to produce a stable left limit in time.
class NotCadlagError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Semimartingale decomposition requested for a path whose provenance
/// does not match the given driver specification.
class DecompositionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Reference integrator asked to handle a coefficient outside its scope.
class OracleUnsupportedError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid or non-finite coefficient values encountered by the solver.
class InvalidCoefficientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad CLI/JSON configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace skflow

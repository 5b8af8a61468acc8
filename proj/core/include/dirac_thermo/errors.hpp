#pragma once

#include <stdexcept>
#include <string>

namespace dirac_thermo {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A model evaluator was called outside its admissible domain
/// (nonpositive gas volume, temperature at or below the floor, ...).
class ModelDomainError : public Error {
public:
    using Error::Error;
};

/// The constraint form matrix lost row rank at the evaluation point.
class ConstraintRankError : public Error {
public:
    using Error::Error;
};

/// The mechanical saddle-point system cannot be solved: ill-conditioned
/// regular block, indefinite projected mass, or an unrestorable algebraic
/// force balance in a degenerate velocity direction.
class KKTSingularError : public Error {
public:
    using Error::Error;
};

/// Newton iteration for the inverse Legendre transform failed to converge.
class LegendreInversionError : public Error {
public:
    using Error::Error;
};

/// A model failed its registration-time consistency checks
/// (analytic derivatives disagree with finite differences, bad shapes, ...).
class ModelValidationError : public Error {
public:
    using Error::Error;
};

/// An initial state violates the preconditions of a simulation
/// (mechanical constraint residual above tolerance, nonfinite entries, ...).
class InitialStateError : public Error {
public:
    using Error::Error;
};

/// A run configuration is malformed. `key()` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error("config key '" + key + "': " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace dirac_thermo

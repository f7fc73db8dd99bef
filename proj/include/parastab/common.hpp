#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace parastab {

/// Numerical failure during quadrature / transform evaluation (non-finite
/// result, budget overflow). Carries the offending input when known.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A model assumption failed hard (ellipticity violation, drift with
/// alpha <= 1, non-monotone tempering, ...). Carries a witness description.
class AssumptionError : public std::runtime_error {
public:
    explicit AssumptionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Grid/quadrature resolution is insufficient for the requested tolerance.
class ResolutionError : public std::runtime_error {
public:
    explicit ResolutionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// The correction series failed to contract at the requested horizon.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed configuration input.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A measured zero distance contradicted by a density mismatch.
class InconsistencyError : public std::runtime_error {
public:
    explicit InconsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

inline bool is_finite(double x) { return std::isfinite(x); }

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

}  // namespace parastab

#pragma once

#include "parastab/levy_noise.hpp"

#include <functional>
#include <string>
#include <vector>

namespace parastab {

/// A coefficient surface (t, x) -> value.
struct CoefficientField {
    std::function<double(double, double)> value;
    bool time_homogeneous = true;

    double operator()(double t, double x) const { return value(t, x); }

    static CoefficientField constant(double c);
    /// a + b * sin(c x + d)
    static CoefficientField sinusoidal(double a, double b, double c, double d);
    /// clamp(a + b x, lo, hi)
    static CoefficientField affine_clamped(double a, double b, double lo, double hi);
    /// a * exp(-((x - x0)/w)^2)
    static CoefficientField bump(double a, double x0, double w);
};

/// Drift/scale pair with Hoelder and ellipticity metadata plus the noise.
struct SdeModel {
    CoefficientField drift;   // b
    CoefficientField sigma;   // positive scale multiplying dZ
    double declared_eta = 1.0;    // Hoelder exponent in (0, 1]
    double declared_kappa = 2.0;  // ellipticity constant > 1
    TemperedStableSpec noise;

    bool time_homogeneous() const {
        return drift.time_homogeneous && sigma.time_homogeneous;
    }
};

struct ValidationGrid {
    std::vector<double> times;
    std::vector<double> xs;
    static ValidationGrid regular(double t0, double t1, int nt, double x0, double x1, int nx);
};

struct ValidationReport {
    double sigma_sq_min = 0.0;
    double sigma_sq_max = 0.0;
    double holder_ratio = 0.0;  // sup |sigma(t,x)-sigma(t,x')| / |x-x'|^eta
    double drift_bound = 0.0;
    bool drift_zero_required = false;  // alpha <= 1
    bool passed = false;
    double doubling_constant = 1.0;
    std::vector<std::string> warnings;
};

/// Checks ellipticity, boundedness and the alpha <= 1 => b == 0 rule on the
/// grid. Throws AssumptionError (with witness) on a hard violation.
ValidationReport validate_assumptions(const SdeModel& model, const ValidationGrid& grid);

/// Pushforward measure nu_t(x, [a,b]) = nu([a,b]/sigma(t,x)); b may be inf.
double pushforward_measure(const SdeModel& model, double t, double x, double a, double b);

/// Base model plus perturbed models indexed by n and their measured distances.
struct PerturbationSequence {
    SdeModel base;
    std::vector<int> indices;          // the n values
    std::vector<SdeModel> perturbed;   // same length as indices
    std::vector<double> measured_delta;  // filled by estimate_delta_n
};

/// Interval family and evaluation lattice used to scan the measure distance.
struct DeltaTestFamily {
    std::vector<std::pair<double, double>> intervals;  // signed, away from 0
    std::vector<double> xs;
    std::vector<double> times;
    double delta_cap = 1.0;  // the cap in delta ^ |x-x'|^{eta (alpha^1)}

    /// Dyadic intervals [+-2^j, +-2^{j+1}], j in [j_lo, j_hi], plus the two
    /// half-lines beyond, on an n_x-point lattice over [x_lo, x_hi].
    static DeltaTestFamily dyadic(double x_lo, double x_hi, int n_x, double t,
                                  int j_lo = -10, int j_hi = 10);
};

struct DeltaEstimate {
    double delta = 0.0;        // max of the three parts
    double measure_part = 0.0; // sup |nu_t - nu_t^n| / m(A)
    double holder_part = 0.0;  // Hoelder-difference quotient
    double drift_part = 0.0;   // sup |b - b_n| (C_b = 1)
};

/// Finite-family estimate of the coefficient-stability distance between two
/// models (lower-bound semantics: the sup over Borel sets is scanned over
/// the family only).
DeltaEstimate estimate_delta_n(const SdeModel& base, const SdeModel& perturbed,
                               const DeltaTestFamily& family);

/// Hoelder-in-x constant of the pushforward measures on the family (base
/// model), the quotient sup_A |nu_t(x,A)-nu_t(x',A)| / (cap * m(A)).
double pushforward_holder_constant(const SdeModel& model, const DeltaTestFamily& family);

}  // namespace parastab

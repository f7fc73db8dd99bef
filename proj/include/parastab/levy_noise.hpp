#pragma once

#include <span>
#include <string>
#include <vector>

namespace parastab {

enum class Tempering { none, exponential, tabulated };

/// Symmetric tempered-stable driving noise in one dimension.
///
/// The Levy measure has density weight(sign z) * scale_c * qbar(|z|) / |z|^{1+alpha}.
/// For tempering == none the characteristic exponent is calibrated so that
/// phi_Z(p) = -scale_c * wbar * |p|^alpha exactly (wbar = mean spectral weight);
/// tempered exponents are the literal integral of (cos(pz) - 1) against the
/// Levy measure.
struct TemperedStableSpec {
    double alpha = 1.5;
    Tempering tempering = Tempering::none;
    double lambda = 0.0;            // exponential tempering rate
    std::vector<double> qbar_s;     // tabulated abscissae (increasing, > 0)
    std::vector<double> qbar_q;     // tabulated values (positive, non-increasing)
    double weight_plus = 1.0;
    double weight_minus = 1.0;
    double scale_c = 1.0;
    double gamma = 1.0;             // decay order; fixed to 1 in d = 1

    double qbar(double s) const;            // tempering function
    double mean_weight() const { return 0.5 * (weight_plus + weight_minus); }

    static TemperedStableSpec pure_stable(double alpha, double scale_c = 1.0);
    static TemperedStableSpec exponential_tempered(double alpha, double lambda,
                                                   double scale_c = 1.0);
};

struct SpecValidation {
    double doubling_constant = 1.0;  // max qbar(s)/qbar(2s) on the log test grid
    std::vector<std::string> warnings;
};

/// Hard-checks the spec invariants; returns the doubling constant and any
/// soft warnings. Throws AssumptionError on violation.
SpecValidation validate_spec(const TemperedStableSpec& spec);

/// Levy-Khintchine exponent phi_Z(p) = int (cos(pz) - 1) nu(dz): real, <= 0,
/// even in p. Closed forms for pure stable (calibrated) and exponential
/// tempering with alpha != 1; quadrature otherwise.
double levy_exponent(const TemperedStableSpec& spec, double p);

struct H2Report {
    std::vector<bool> pass;        // per grid point: phi_Z(p) <= -K |p|^alpha
    double largest_admissible_K = 0.0;
    bool all_pass = false;
};

/// Checks the exponent decay phi_Z(p) <= -K|p|^alpha over a grid of |p| > 1.
H2Report verify_h2(const TemperedStableSpec& spec, double K,
                   std::span<const double> p_grid);

/// Levy measure density at jump size z != 0 (literal formula).
double levy_density(const TemperedStableSpec& spec, double z);

/// Mass of the dominating measure m (unit weights) on [a, b], 0 not inside.
/// b may be +infinity.
double dominating_mass(const TemperedStableSpec& spec, double a, double b);

/// nu([a, b]) with the spec's spectral weights; [a, b] on one side of 0,
/// b may be +/- infinity (same-signed half line).
double nu_interval(const TemperedStableSpec& spec, double a, double b);

// --- quantities tied to the exponent normalization ------------------------

/// C_alpha = int_0^inf (1 - cos u) u^{-1-alpha} du.
double one_minus_cos_moment(double alpha);

/// Coefficient of -|p|^alpha in the calibrated pure-stable exponent.
double effective_exponent_scale(const TemperedStableSpec& spec);

/// Density of the Levy measure consistent with levy_exponent: equal to
/// levy_density for tempered specs, levy_density / (2 C_alpha) when the
/// pure-stable calibration is active.
double effective_levy_density(const TemperedStableSpec& spec, double z);

/// int_a^inf of the effective density over one ray (a > 0).
double effective_tail_mass(const TemperedStableSpec& spec, double a);

/// Truncated second moment 2 int_0^eps s^2 nu(ds)/ds of the literal measure.
double truncated_second_moment(const TemperedStableSpec& spec, double eps);

}  // namespace parastab

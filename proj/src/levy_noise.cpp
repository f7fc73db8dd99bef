#include "parastab/levy_noise.hpp"
#include "parastab/common.hpp"
#include "parastab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace parastab {

namespace {

double qbar_tabulated(const TemperedStableSpec& spec, double s) {
    const auto& xs = spec.qbar_s;
    const auto& qs = spec.qbar_q;
    if (s <= xs.front()) return qs.front();
    if (s >= xs.back()) {
        // Continue the last log-log slope when it is decreasing, else flat.
        size_t n = xs.size();
        double slope = (std::log(qs[n - 1]) - std::log(qs[n - 2])) /
                       (std::log(xs[n - 1]) - std::log(xs[n - 2]));
        if (slope >= 0.0) return qs.back();
        return qs.back() * std::exp(slope * (std::log(s) - std::log(xs.back())));
    }
    auto it = std::upper_bound(xs.begin(), xs.end(), s);
    size_t i = static_cast<size_t>(it - xs.begin());
    double t = (std::log(s) - std::log(xs[i - 1])) / (std::log(xs[i]) - std::log(xs[i - 1]));
    return std::exp((1.0 - t) * std::log(qs[i - 1]) + t * std::log(qs[i]));
}

// Exponent by quadrature: 2 wbar c int_0^inf (cos(ps) - 1) qbar(s) s^{-1-alpha} ds.
// Split at s0 <= quarter period; oscillatory half-period summation outside,
// with the non-oscillatory tail moment under the z = e^u substitution.
double exponent_quadrature(const TemperedStableSpec& spec, double p) {
    p = std::abs(p);
    if (p == 0.0) return 0.0;
    const double a = spec.alpha;
    const double pref = 2.0 * spec.mean_weight() * spec.scale_c;
    auto g = [&](double s) { return spec.qbar(s) * std::pow(s, -1.0 - a); };

    double s0 = std::min(1.0, 0.5 * kPi / p);
    // (0, s0]: integrand ~ -p^2 s^{1-alpha}/2 at 0, integrable.
    double inner = quad::integrate_singular_left(
        [&](double s) { return (std::cos(p * s) - 1.0) * g(s); }, 0.0, s0, 1e-12);
    // [s0, inf): cos part by half-period summation.
    double osc = quad::oscillatory_cos_tail(g, s0, p, 1e-14);
    // [s0, inf) of -g, via the exponential substitution s = e^u.
    double u0 = std::log(s0);
    double tail = quad::integrate_to_inf(
        [&](double u) { return g(std::exp(u)) * std::exp(u); }, 1.0, 1e-12);
    // integrate_to_inf needs a positive start; handle [u0, 1] separately.
    double head = quad::integrate([&](double u) { return g(std::exp(u)) * std::exp(u); },
                                  u0, 1.0, 1e-12);
    double minus_mass = head + tail;
    double val = pref * (inner + osc - minus_mass);
    if (!std::isfinite(val)) {
        throw NumericalError("levy_exponent quadrature overflow at p = " + std::to_string(p));
    }
    return val;
}

}  // namespace

double TemperedStableSpec::qbar(double s) const {
    s = std::abs(s);
    switch (tempering) {
        case Tempering::none: return 1.0;
        case Tempering::exponential: return std::exp(-lambda * s);
        case Tempering::tabulated: return qbar_tabulated(*this, s);
    }
    return 1.0;
}

TemperedStableSpec TemperedStableSpec::pure_stable(double alpha, double scale_c) {
    TemperedStableSpec s;
    s.alpha = alpha;
    s.tempering = Tempering::none;
    s.scale_c = scale_c;
    return s;
}

TemperedStableSpec TemperedStableSpec::exponential_tempered(double alpha, double lambda,
                                                            double scale_c) {
    TemperedStableSpec s;
    s.alpha = alpha;
    s.tempering = Tempering::exponential;
    s.lambda = lambda;
    s.scale_c = scale_c;
    return s;
}

SpecValidation validate_spec(const TemperedStableSpec& spec) {
    SpecValidation out;
    if (!(spec.alpha > 0.0) || !(spec.alpha < 2.0)) {
        throw AssumptionError("alpha must lie strictly inside (0, 2)");
    }
    if (spec.weight_plus != spec.weight_minus) {
        throw AssumptionError("spectral weights must be symmetric (weight_plus == weight_minus)");
    }
    if (spec.weight_plus < 0.0) throw AssumptionError("spectral weights must be nonnegative");
    if (spec.weight_plus > 1.0) {
        throw AssumptionError(
            "spectral weights above 1 break the domination nu <= m against the "
            "unit-weight dominating measure");
    }
    if (!(spec.scale_c > 0.0)) throw AssumptionError("scale_c must be positive");
    if (spec.gamma != 1.0) {
        throw AssumptionError("gamma must equal 1 in one dimension");
    }
    if (spec.tempering == Tempering::exponential && !(spec.lambda > 0.0)) {
        throw AssumptionError("exponential tempering requires lambda > 0");
    }
    if (spec.tempering == Tempering::tabulated) {
        if (spec.qbar_s.size() < 2 || spec.qbar_s.size() != spec.qbar_q.size()) {
            throw AssumptionError("tabulated qbar needs >= 2 matched samples");
        }
        for (size_t i = 0; i < spec.qbar_s.size(); ++i) {
            if (!(spec.qbar_s[i] > 0.0) || !(spec.qbar_q[i] > 0.0)) {
                throw AssumptionError("tabulated qbar samples must be positive");
            }
            if (i > 0) {
                if (spec.qbar_s[i] <= spec.qbar_s[i - 1]) {
                    throw AssumptionError("tabulated qbar abscissae must increase");
                }
                if (spec.qbar_q[i] > spec.qbar_q[i - 1]) {
                    throw AssumptionError("qbar must be non-increasing; violated at s = " +
                                          std::to_string(spec.qbar_s[i]));
                }
            }
        }
    }
    // Doubling constant on a logarithmic test grid (reported, not asserted).
    double worst = 1.0;
    for (int j = -10; j <= 5; ++j) {
        double s = std::pow(2.0, j);
        double q1 = spec.qbar(s), q2 = spec.qbar(2.0 * s);
        if (q2 > 0.0) worst = std::max(worst, q1 / q2);
    }
    out.doubling_constant = worst;
    if (spec.gamma + spec.alpha <= 1.0) {
        out.warnings.push_back("gamma + alpha <= d; tail decay assumption degenerate");
    }
    return out;
}

double one_minus_cos_moment(double alpha) {
    if (std::abs(alpha - 1.0) < 1e-9) return kPi / 2.0;
    return -std::tgamma(-alpha) * std::cos(kPi * alpha / 2.0);
}

double effective_exponent_scale(const TemperedStableSpec& spec) {
    return spec.scale_c * spec.mean_weight();
}

double levy_exponent(const TemperedStableSpec& spec, double p) {
    p = std::abs(p);
    if (p == 0.0) return 0.0;
    switch (spec.tempering) {
        case Tempering::none:
            return -effective_exponent_scale(spec) * std::pow(p, spec.alpha);
        case Tempering::exponential: {
            if (std::abs(spec.alpha - 1.0) < 1e-9) {
                return exponent_quadrature(spec, p);  // CGMY form degenerates
            }
            const double a = spec.alpha, l = spec.lambda;
            double mod = std::pow(l * l + p * p, 0.5 * a);
            double arg = a * std::atan2(p, l);
            double val = 2.0 * spec.mean_weight() * spec.scale_c * std::tgamma(-a) *
                         (mod * std::cos(arg) - std::pow(l, a));
            if (!std::isfinite(val)) {
                throw NumericalError("levy_exponent closed form overflow at p = " +
                                     std::to_string(p));
            }
            return val;
        }
        case Tempering::tabulated:
            return exponent_quadrature(spec, p);
    }
    return 0.0;
}

H2Report verify_h2(const TemperedStableSpec& spec, double K,
                   std::span<const double> p_grid) {
    if (p_grid.empty()) throw std::invalid_argument("verify_h2: empty frequency grid");
    H2Report rep;
    rep.pass.reserve(p_grid.size());
    double smallest_ratio = std::numeric_limits<double>::infinity();
    bool all = true;
    for (double p : p_grid) {
        if (!(std::abs(p) > 1.0)) {
            throw std::invalid_argument("verify_h2 requires |p| > 1 on the grid");
        }
        double phi = levy_exponent(spec, p);
        double pa = std::pow(std::abs(p), spec.alpha);
        bool ok = phi <= -K * pa;
        rep.pass.push_back(ok);
        all = all && ok;
        smallest_ratio = std::min(smallest_ratio, -phi / pa);
    }
    rep.all_pass = all;
    rep.largest_admissible_K = smallest_ratio;
    return rep;
}

double levy_density(const TemperedStableSpec& spec, double z) {
    if (z == 0.0) throw std::invalid_argument("levy_density singular at z = 0");
    double w = z > 0.0 ? spec.weight_plus : spec.weight_minus;
    return w * spec.scale_c * spec.qbar(std::abs(z)) * std::pow(std::abs(z), -1.0 - spec.alpha);
}

namespace {

// int_a^b qbar(s) s^{-1-alpha} ds on 0 < a <= b <= inf, times `coeff`.
double radial_mass(const TemperedStableSpec& spec, double a, double b, double coeff) {
    if (!(a > 0.0)) throw std::invalid_argument("interval must stay away from 0 (infinite mass)");
    if (b <= a) return 0.0;
    const double al = spec.alpha;
    if (spec.tempering == Tempering::none) {
        double upper = std::isinf(b) ? 0.0 : std::pow(b, -al);
        return coeff * (std::pow(a, -al) - upper) / al;
    }
    auto g = [&](double s) { return spec.qbar(s) * std::pow(s, -1.0 - al); };
    if (std::isinf(b)) return coeff * quad::integrate_to_inf(g, a, 1e-11);
    // Dyadic blocks keep the near-origin steepness resolved.
    double sum = 0.0, lo = a;
    while (lo * 2.0 < b) {
        sum += quad::integrate(g, lo, lo * 2.0, 1e-11);
        lo *= 2.0;
    }
    sum += quad::integrate(g, lo, b, 1e-11);
    return coeff * sum;
}

}  // namespace

double dominating_mass(const TemperedStableSpec& spec, double a, double b) {
    if (a > b) std::swap(a, b);
    if (a == b) return 0.0;
    if (a < 0.0 && b > 0.0) {
        throw std::invalid_argument("dominating_mass: interval touches 0, infinite mass");
    }
    if (b <= 0.0) {
        std::swap(a, b);
        a = -a;
        b = -b;
    }
    if (a == 0.0) throw std::invalid_argument("dominating_mass: interval touches 0");
    return radial_mass(spec, a, b, spec.scale_c);
}

double nu_interval(const TemperedStableSpec& spec, double a, double b) {
    if (a > b) std::swap(a, b);
    if (a == b) return 0.0;
    if (a < 0.0 && b > 0.0) {
        throw std::invalid_argument("nu_interval: interval touches 0");
    }
    double w = (a >= 0.0) ? spec.weight_plus : spec.weight_minus;
    if (b <= 0.0) {
        std::swap(a, b);
        a = -a;
        b = -b;
    }
    if (a == 0.0) throw std::invalid_argument("nu_interval: interval touches 0");
    return radial_mass(spec, a, b, w * spec.scale_c);
}

double effective_levy_density(const TemperedStableSpec& spec, double z) {
    double factor = spec.tempering == Tempering::none
                        ? 1.0 / (2.0 * one_minus_cos_moment(spec.alpha))
                        : 1.0;
    return factor * levy_density(spec, z);
}

double effective_tail_mass(const TemperedStableSpec& spec, double a) {
    double factor = spec.tempering == Tempering::none
                        ? 1.0 / (2.0 * one_minus_cos_moment(spec.alpha))
                        : 1.0;
    return radial_mass(spec, a, std::numeric_limits<double>::infinity(),
                       factor * spec.mean_weight() * spec.scale_c);
}

double truncated_second_moment(const TemperedStableSpec& spec, double eps) {
    if (!(eps > 0.0)) return 0.0;
    const double al = spec.alpha;
    double coeff = 2.0 * spec.mean_weight() * spec.scale_c;
    return coeff * quad::integrate_singular_left(
                       [&](double s) { return spec.qbar(s) * std::pow(s, 1.0 - al); }, 0.0,
                       eps, 1e-12);
}

}  // namespace parastab

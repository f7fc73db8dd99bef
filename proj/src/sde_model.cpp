#include "parastab/sde_model.hpp"
#include "parastab/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace parastab {

CoefficientField CoefficientField::constant(double c) {
    return {[c](double, double) { return c; }, true};
}

CoefficientField CoefficientField::sinusoidal(double a, double b, double c, double d) {
    return {[=](double, double x) { return a + b * std::sin(c * x + d); }, true};
}

CoefficientField CoefficientField::affine_clamped(double a, double b, double lo, double hi) {
    return {[=](double, double x) { return std::clamp(a + b * x, lo, hi); }, true};
}

// Compactly supported: exactly zero outside |x - x0| >= w.
CoefficientField CoefficientField::bump(double a, double x0, double w) {
    return {[=](double, double x) {
                double r = std::abs(x - x0) / w;
                if (r >= 1.0) return 0.0;
                double c = std::cos(0.5 * kPi * r);
                return a * c * c;
            },
            true};
}

ValidationGrid ValidationGrid::regular(double t0, double t1, int nt, double x0, double x1,
                                       int nx) {
    ValidationGrid g;
    g.times.reserve(nt);
    g.xs.reserve(nx);
    for (int i = 0; i < nt; ++i) {
        g.times.push_back(nt == 1 ? t0 : t0 + (t1 - t0) * i / (nt - 1));
    }
    for (int i = 0; i < nx; ++i) {
        g.xs.push_back(nx == 1 ? x0 : x0 + (x1 - x0) * i / (nx - 1));
    }
    return g;
}

ValidationReport validate_assumptions(const SdeModel& model, const ValidationGrid& grid) {
    if (grid.times.empty() || grid.xs.empty()) {
        throw std::invalid_argument("validate_assumptions: empty lattice");
    }
    if (!(model.declared_kappa > 1.0)) {
        throw AssumptionError("ellipticity constant kappa must exceed 1");
    }
    if (!(model.declared_eta > 0.0) || model.declared_eta > 1.0) {
        throw AssumptionError("Hoelder exponent eta must lie in (0, 1]");
    }
    ValidationReport rep;
    SpecValidation sv = validate_spec(model.noise);
    rep.doubling_constant = sv.doubling_constant;
    rep.warnings = sv.warnings;

    const double lo = 1.0 / model.declared_kappa;
    const double hi = model.declared_kappa;
    rep.sigma_sq_min = std::numeric_limits<double>::infinity();
    rep.sigma_sq_max = 0.0;
    rep.drift_zero_required = model.noise.alpha <= 1.0;

    for (double t : grid.times) {
        for (double x : grid.xs) {
            double s = model.sigma(t, x);
            double s2 = s * s;
            if (!(s > 0.0) || s2 < lo * (1.0 - 1e-12) || s2 > hi * (1.0 + 1e-12)) {
                std::ostringstream os;
                os << "ellipticity violated: sigma(" << t << ", " << x << ") = " << s
                   << ", sigma^2 outside [" << lo << ", " << hi << "]";
                throw AssumptionError(os.str());
            }
            rep.sigma_sq_min = std::min(rep.sigma_sq_min, s2);
            rep.sigma_sq_max = std::max(rep.sigma_sq_max, s2);
            double b = model.drift(t, x);
            if (!std::isfinite(b)) {
                throw AssumptionError("drift not finite at grid point");
            }
            rep.drift_bound = std::max(rep.drift_bound, std::abs(b));
        }
    }
    if (rep.drift_zero_required && rep.drift_bound > 0.0) {
        throw AssumptionError("alpha <= 1 requires b == 0 (nonzero drift found)");
    }
    // Empirical Hoelder ratio of sigma over lattice pairs (same time slice).
    double ratio = 0.0;
    for (double t : grid.times) {
        for (size_t i = 0; i < grid.xs.size(); ++i) {
            double si = model.sigma(t, grid.xs[i]);
            for (size_t j = i + 1; j < grid.xs.size(); ++j) {
                double dx = std::abs(grid.xs[j] - grid.xs[i]);
                if (dx == 0.0) continue;
                double num = std::abs(model.sigma(t, grid.xs[j]) - si);
                ratio = std::max(ratio, num / std::pow(dx, model.declared_eta));
            }
        }
    }
    rep.holder_ratio = ratio;
    rep.passed = true;
    return rep;
}

double pushforward_measure(const SdeModel& model, double t, double x, double a, double b) {
    double s = model.sigma(t, x);
    if (!(s > 0.0)) throw AssumptionError("pushforward needs sigma > 0");
    return nu_interval(model.noise, a / s, std::isinf(b) ? b : b / s);
}

DeltaTestFamily DeltaTestFamily::dyadic(double x_lo, double x_hi, int n_x, double t,
                                        int j_lo, int j_hi) {
    DeltaTestFamily fam;
    for (int j = j_lo; j <= j_hi; ++j) {
        double a = std::pow(2.0, j), b = std::pow(2.0, j + 1);
        fam.intervals.emplace_back(a, b);
        fam.intervals.emplace_back(-b, -a);
    }
    double edge = std::pow(2.0, j_hi + 1);
    double inf = std::numeric_limits<double>::infinity();
    fam.intervals.emplace_back(edge, inf);
    fam.intervals.emplace_back(-inf, -edge);
    for (int i = 0; i < n_x; ++i) {
        fam.xs.push_back(n_x == 1 ? x_lo : x_lo + (x_hi - x_lo) * i / (n_x - 1));
    }
    fam.times.push_back(t);
    return fam;
}

namespace {

// nu(A / s) for a signed interval A; reuses interval masses per sigma value.
double pushed_mass(const TemperedStableSpec& spec, double s,
                   const std::pair<double, double>& iv) {
    double a = iv.first, b = iv.second;
    return nu_interval(spec, std::isinf(a) ? a : a / s, std::isinf(b) ? b : b / s);
}

}  // namespace

DeltaEstimate estimate_delta_n(const SdeModel& base, const SdeModel& perturbed,
                               const DeltaTestFamily& family) {
    if (family.intervals.empty() || family.xs.empty() || family.times.empty()) {
        throw std::invalid_argument("estimate_delta_n: empty test family");
    }
    DeltaEstimate est;
    const double eta = base.declared_eta;
    const double reg = eta * std::min(base.noise.alpha, 1.0);

    for (double t : family.times) {
        // Drift part (C_b = 1).
        for (double x : family.xs) {
            est.drift_part =
                std::max(est.drift_part, std::abs(base.drift(t, x) - perturbed.drift(t, x)));
        }
        for (size_t ai = 0; ai < family.intervals.size(); ++ai) {
            const auto& iv = family.intervals[ai];
            double m = dominating_mass(base.noise, iv.first, iv.second);
            if (!(m > 0.0)) continue;
            std::vector<double> nb(family.xs.size()), np(family.xs.size());
            for (size_t i = 0; i < family.xs.size(); ++i) {
                nb[i] = pushed_mass(base.noise, base.sigma(t, family.xs[i]), iv);
                np[i] = pushed_mass(perturbed.noise, perturbed.sigma(t, family.xs[i]), iv);
                est.measure_part = std::max(est.measure_part, std::abs(nb[i] - np[i]) / m);
            }
            for (size_t i = 0; i < family.xs.size(); ++i) {
                for (size_t j = i + 1; j < family.xs.size(); ++j) {
                    double dx = std::abs(family.xs[j] - family.xs[i]);
                    if (dx == 0.0) continue;
                    double cap = std::min(family.delta_cap, std::pow(dx, reg));
                    double num = std::abs(nb[i] - nb[j] - np[i] + np[j]);
                    est.holder_part = std::max(est.holder_part, num / (cap * m));
                }
            }
        }
    }
    est.delta = std::max({est.measure_part, est.holder_part, est.drift_part});
    return est;
}

double pushforward_holder_constant(const SdeModel& model, const DeltaTestFamily& family) {
    double worst = 0.0;
    const double reg = model.declared_eta * std::min(model.noise.alpha, 1.0);
    for (double t : family.times) {
        for (const auto& iv : family.intervals) {
            double m = dominating_mass(model.noise, iv.first, iv.second);
            if (!(m > 0.0)) continue;
            std::vector<double> nb(family.xs.size());
            for (size_t i = 0; i < family.xs.size(); ++i) {
                nb[i] = pushed_mass(model.noise, model.sigma(t, family.xs[i]), iv);
            }
            for (size_t i = 0; i < family.xs.size(); ++i) {
                for (size_t j = i + 1; j < family.xs.size(); ++j) {
                    double dx = std::abs(family.xs[j] - family.xs[i]);
                    if (dx == 0.0) continue;
                    double cap = std::min(family.delta_cap, std::pow(dx, reg));
                    worst = std::max(worst, std::abs(nb[i] - nb[j]) / (cap * m));
                }
            }
        }
    }
    return worst;
}

}  // namespace parastab

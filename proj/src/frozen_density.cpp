#include "parastab/frozen_density.hpp"
#include "parastab/common.hpp"
#include "parastab/fft.hpp"
#include "parastab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace parastab {

namespace {

// Time quadrature nodes over [t, T]: a single node when sigma is constant in
// time, Gauss-Legendre otherwise.
std::vector<quad::Node> time_nodes_for(const SdeModel& model, double t, double T) {
    if (model.sigma.time_homogeneous) {
        return {{t, T - t}};
    }
    return quad::gauss_legendre(t, T, 48);
}

}  // namespace

void FrozenDensityRequest::validate() const {
    if (!(T > t)) throw std::invalid_argument("frozen density requires T > t");
    if (!lattice.power_of_two()) {
        throw std::invalid_argument("lattice count must be a power of two");
    }
    double scale = std::pow(T - t, 1.0 / model.noise.alpha);
    if (lattice.half_width < 10.0 * scale ||
        lattice.half_width < std::abs(lattice.center - y) + 10.0 * scale) {
        throw std::invalid_argument(
            "lattice half-width must cover 10 (T-t)^{1/alpha} around the center and y");
    }
}

double frozen_exponent(const SdeModel& model, double t, double T, double y, double p) {
    if (!(T > t)) throw std::invalid_argument("frozen_exponent requires T > t");
    double total = 0.0;
    for (const auto& node : time_nodes_for(model, t, T)) {
        total += node.w * levy_exponent(model.noise, model.sigma(node.x, y) * p);
    }
    return total;
}

double frozen_stable_scale(const SdeModel& model, double t, double T, double y) {
    double ce = effective_exponent_scale(model.noise);
    double total = 0.0;
    for (const auto& node : time_nodes_for(model, t, T)) {
        total += node.w * std::pow(model.sigma(node.x, y), model.noise.alpha);
    }
    return ce * total;
}

double frozen_tail_density(const SdeModel& model, double t, double T, double y, double v) {
    v = std::abs(v);
    const TemperedStableSpec& spec = model.noise;
    if (spec.tempering == Tempering::none) {
        // Three-term tail series of the stable density with scale tau:
        // f(v) = (1/pi) sum_n (-1)^{n+1} Gamma(n a + 1)/n! sin(n pi a/2) tau^n v^{-n a - 1}
        double tau = frozen_stable_scale(model, t, T, y);
        double a = spec.alpha;
        double sum = 0.0, sign = 1.0, fact = 1.0;
        for (int n = 1; n <= 3; ++n) {
            fact *= n;
            sum += sign * std::tgamma(n * a + 1.0) / fact * std::sin(n * kPi * a / 2.0) *
                   std::pow(tau, n) * std::pow(v, -n * a - 1.0);
            sign = -sign;
        }
        return sum / kPi;
    }
    double total = 0.0;
    for (const auto& node : time_nodes_for(model, t, T)) {
        double s = model.sigma(node.x, y);
        total += node.w * effective_levy_density(spec, v / s) / s;
    }
    return total;
}

double frozen_tail_mass_beyond(const SdeModel& model, double t, double T, double y,
                               double edge) {
    const TemperedStableSpec& spec = model.noise;
    if (spec.tempering == Tempering::none) {
        double tau = frozen_stable_scale(model, t, T, y);
        double a = spec.alpha;
        double sum = 0.0, sign = 1.0, fact = 1.0;
        for (int n = 1; n <= 3; ++n) {
            fact *= n;
            sum += sign * std::tgamma(n * a + 1.0) / fact * std::sin(n * kPi * a / 2.0) *
                   std::pow(tau, n) * std::pow(edge, -n * a) / (n * a);
            sign = -sign;
        }
        return sum / kPi;
    }
    double total = 0.0;
    for (const auto& node : time_nodes_for(model, t, T)) {
        double s = model.sigma(node.x, y);
        total += node.w * effective_tail_mass(spec, edge / s);
    }
    return total;
}

double pbar(double t, double T, double x, double y, const TemperedStableSpec& spec) {
    if (!(T > t)) throw std::invalid_argument("pbar requires T > t");
    double scale = std::pow(T - t, 1.0 / spec.alpha);
    double rho = std::abs(y - x);
    double q = rho > 0.0 ? std::min(1.0, std::pow(rho, spec.gamma - 1.0)) * spec.qbar(rho)
                         : spec.qbar(0.0);
    return std::pow(T - t, -1.0 / spec.alpha) *
           std::pow(1.0 + rho / scale, -(spec.gamma + spec.alpha)) * q;
}

namespace {

struct InversionResult {
    std::vector<double> values;
    double imag_residual = 0.0;
};

// Shared post-processing: strip periodization images, clip ringing, account
// lattice and tail mass. expected_mass rescales the window (the truncated
// Poisson series carries less than unit mass); strict=false skips the hard
// gates for diagnostic objects.
void finalize_density(DensityGrid& grid, const SdeModel& model, double expected_mass = 1.0,
                      bool strict = true) {
    const Lattice& lat = grid.lattice;
    const double period = 2.0 * lat.half_width;
    const double y = grid.y;
    if (strict) {
        for (std::size_t j = 0; j < lat.count; ++j) {
            double v = lat.point(j) - y;
            double images = 0.0;
            for (int m = 1; m <= 64; ++m) {
                double add = frozen_tail_density(model, grid.t, grid.T, y, v - m * period) +
                             frozen_tail_density(model, grid.t, grid.T, y, v + m * period);
                images += add * expected_mass;
                if (add < 1e-18) break;
            }
            grid.values[j] -= images;
        }
    }
    double peak = 0.0;
    for (double v : grid.values) peak = std::max(peak, v);
    double neg_tol = 1e-9 * std::max(1.0, peak);
    double worst_neg = 0.0;
    for (auto& v : grid.values) {
        if (v < 0.0) {
            worst_neg = std::min(worst_neg, v);
            if (strict && v < -neg_tol) {
                throw ResolutionError(
                    "density inversion produced negative lobe " + std::to_string(v) +
                    "; enlarge the lattice / frequency budget");
            }
            v = 0.0;
        }
    }
    grid.clip_magnitude = -worst_neg;

    const double h = lat.spacing();
    double sum = 0.0;
    for (double v : grid.values) sum += v;
    sum -= 0.5 * (grid.values.front() + grid.values.back());
    grid.trapezoid_mass = h * sum;
    double left = y - lat.left_edge();
    double right = lat.right_edge() - y;
    grid.tail_mass = expected_mass *
                     (frozen_tail_mass_beyond(model, grid.t, grid.T, y, left) +
                      frozen_tail_mass_beyond(model, grid.t, grid.T, y, right));
    double total = grid.total_mass();
    if (strict && (total / expected_mass < 0.99 || total / expected_mass > 1.001)) {
        throw ResolutionError("density mass " + std::to_string(total) +
                              " outside [0.99, 1.001]; enlarge the lattice");
    }
}

}  // namespace

DensityGrid frozen_density_grid(const FrozenDensityRequest& request) {
    request.validate();
    const Lattice& lat = request.lattice;
    DensityGrid grid;
    grid.t = request.t;
    grid.T = request.T;
    grid.y = request.y;
    grid.lattice = lat;

    // Characteristic function on the DFT frequencies, cut off once the
    // exponent is numerically dead. Even in p: evaluate |p| only.
    const double dp = kTwoPi / (lat.count * lat.spacing());
    std::vector<double> cf_by_k(lat.count / 2 + 1, 0.0);
    bool dead = false;
    for (std::size_t k = 0; k <= lat.count / 2; ++k) {
        if (dead) break;
        double e = frozen_exponent(request.model, request.t, request.T, request.y,
                                   dp * static_cast<double>(k));
        if (e < -41.0) {
            dead = true;  // exp(e) < 1e-17: everything beyond is zero
            break;
        }
        cf_by_k[k] = std::exp(e);
    }
    auto multiplier = [&](double p) -> std::complex<double> {
        auto k = static_cast<std::size_t>(std::llround(std::abs(p) / dp));
        return k < cf_by_k.size() ? cf_by_k[k] : 0.0;
    };
    double u0 = lat.left_edge() - request.y;
    grid.values = fft::invert_spectrum(multiplier, lat.count, lat.spacing(), u0,
                                       &grid.imag_residual);
    finalize_density(grid, request.model);
    return grid;
}

LevyItoSplit LevyItoSplit::standard(const SdeModel& model, double t, double T) {
    LevyItoSplit s;
    s.r0 = std::pow(T - t, 1.0 / model.noise.alpha);
    return s;
}

DensityGrid levy_ito_reference_density(const FrozenDensityRequest& request,
                                       LevyItoSplit& split) {
    request.validate();
    const SdeModel& model = request.model;
    const TemperedStableSpec& spec = model.noise;
    if (!(split.r0 > 0.0)) split.r0 = std::pow(request.T - request.t, 1.0 / spec.alpha);
    const double r0 = split.r0;
    auto tn = time_nodes_for(model, request.t, request.T);

    // Time-integrated large-jump rate Lambda = U * nubar_S(R).
    double lambda_total = 0.0;
    for (const auto& node : tn) {
        double s = model.sigma(node.x, request.y);
        lambda_total += node.w * 2.0 * effective_tail_mass(spec, r0 / s);
    }
    if (!std::isfinite(lambda_total)) {
        throw NumericalError("compound-Poisson rate not finite");
    }
    split.poisson_rate = lambda_total;

    // Poisson series order from the tail bound.
    int k_needed = 0;
    {
        double term = std::exp(-lambda_total);  // k = 0 weight
        double cum = term;
        while (1.0 - cum > split.tail_tol && k_needed < 400) {
            ++k_needed;
            term *= lambda_total / k_needed;
            cum += term;
        }
    }
    int k_max = split.k_max;
    if (k_max < 0) {
        k_max = k_needed;
    } else if (k_max < k_needed) {
        double tail = 1.0;
        {
            double term = std::exp(-lambda_total), cum = term;
            for (int j = 1; j <= k_max; ++j) {
                term *= lambda_total / j;
                cum += term;
            }
            tail = 1.0 - cum;
        }
        if (tail > split.tail_tol) {
            throw ResolutionError("k_max too small: Poisson tail " + std::to_string(tail) +
                                  " above tolerance");
        }
    }
    split.k_max_used = k_max;

    const Lattice& lat = request.lattice;
    const double dp = kTwoPi / (lat.count * lat.spacing());
    auto g_eff = [&](double s) { return effective_levy_density(spec, s); };

    // Mass carried by the truncated series and the corresponding tail.
    double series_mass = 0.0, poisson_tail = 0.0;
    {
        double term = std::exp(-lambda_total), cum = 0.0;
        for (int j = 0; j <= k_max; ++j) {
            if (j > 0) term *= lambda_total / j;
            cum += term;
        }
        series_mass = cum;
        poisson_tail = 1.0 - cum;
    }
    const bool strict = poisson_tail <= 1e-3;

    // Martingale exponent and large-jump transform per frequency, dead-zone
    // cut by the full frozen exponent.
    std::vector<double> cf_by_k(lat.count / 2 + 1, 0.0);
    for (std::size_t k = 0; k <= lat.count / 2; ++k) {
        double p = dp * static_cast<double>(k);
        double full = frozen_exponent(model, request.t, request.T, request.y, p);
        if (full < -45.0) break;
        double phi_m = 0.0;  // time-integrated truncated exponent
        double jhat = 0.0;   // time-integrated FT of the large-jump measure
        for (const auto& node : tn) {
            double s = model.sigma(node.x, request.y);
            double cut = r0 / s;
            if (p == 0.0) {
                jhat += node.w * 2.0 * effective_tail_mass(spec, cut);
                continue;
            }
            double q = p * s;  // local frequency in the jump variable
            double smooth_end = std::min(cut, 0.5 * kPi / q);
            double inner = quad::integrate_singular_left(
                [&](double z) { return (std::cos(q * z) - 1.0) * g_eff(z); }, 0.0,
                smooth_end, 1e-11);
            if (smooth_end < cut) {
                inner += quad::oscillatory_cos_range(g_eff, smooth_end, cut, q) -
                         (effective_tail_mass(spec, smooth_end) - effective_tail_mass(spec, cut));
            }
            phi_m += node.w * 2.0 * inner;
            jhat += node.w * 2.0 * quad::oscillatory_cos_tail(g_eff, cut, q, 1e-13);
        }
        // Truncated Poisson series in the frequency domain.
        double series = 0.0, pow_term = 1.0, fact = 1.0;
        for (int j = 0; j <= k_max; ++j) {
            if (j > 0) {
                pow_term *= jhat;
                fact *= j;
            }
            series += pow_term / fact;
        }
        cf_by_k[k] = std::exp(phi_m - lambda_total) * series;
    }

    DensityGrid grid;
    grid.t = request.t;
    grid.T = request.T;
    grid.y = request.y;
    grid.lattice = lat;
    auto multiplier = [&](double p) -> std::complex<double> {
        auto k = static_cast<std::size_t>(std::llround(std::abs(p) / dp));
        return k < cf_by_k.size() ? cf_by_k[k] : 0.0;
    };
    double u0 = lat.left_edge() - request.y;
    grid.values = fft::invert_spectrum(multiplier, lat.count, lat.spacing(), u0,
                                       &grid.imag_residual);
    finalize_density(grid, model, series_mass, strict);
    return grid;
}

}  // namespace parastab

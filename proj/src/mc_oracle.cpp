#include "parastab/mc_oracle.hpp"
#include "parastab/common.hpp"
#include "parastab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <stdexcept>

namespace parastab {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t path, std::uint64_t step) {
    state_ = mix64(seed + kGolden) ^ mix64(path * 0xC2B2AE3D27D4EB4FULL + 0x165667B19E3779F9ULL) ^
             mix64(step * 0x27D4EB2F165667C5ULL + 0x9E3779B97F4A7C15ULL);
}

std::uint64_t CounterRng::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double CounterRng::uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::exponential() { return -std::log(uniform()); }

double CounterRng::normal() {
    double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double sample_stable_increment(double alpha, double scale, double dt, CounterRng& rng) {
    if (!(alpha > 0.0) || !(alpha < 2.0)) throw std::invalid_argument("alpha outside (0,2)");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    double U = kPi * (rng.uniform() - 0.5);
    double W = rng.exponential();
    double x;
    if (std::abs(alpha - 1.0) < 1e-14) {
        x = std::tan(U);
    } else {
        x = std::sin(alpha * U) / std::pow(std::cos(U), 1.0 / alpha) *
            std::pow(std::cos(U - alpha * U) / W, (1.0 - alpha) / alpha);
    }
    return std::pow(scale * dt, 1.0 / alpha) * x;
}

namespace {

// Standard positive stable S with E exp(-u S) = exp(-u^alpha), alpha < 1
// (CMS with beta = 1 rescaled by cos(pi alpha/2)^{1/alpha}).
double sample_positive_stable(double alpha, CounterRng& rng) {
    double U = kPi * (rng.uniform() - 0.5);
    double W = rng.exponential();
    double theta0 = kPi / 2.0;
    double x = std::sin(alpha * (U + theta0)) / std::pow(std::cos(U), 1.0 / alpha) *
               std::pow(std::cos(U - alpha * (U + theta0)) / W, (1.0 - alpha) / alpha);
    return std::pow(std::cos(kPi * alpha / 2.0), 1.0 / alpha) * x;
}

// One-sided tempered stable increment for alpha < 1: exponential tilting of
// the stable subordinator (exact).
double sample_tempered_onesided(double alpha, double lambda, double intensity, double dt,
                                CounterRng& rng, long budget) {
    // Levy density intensity * e^{-lambda s} s^{-1-alpha} on (0, inf):
    // untempered subordinator scale (dt * intensity * Gamma(1-alpha)/alpha)^{1/alpha}.
    double scale = std::pow(dt * intensity * std::tgamma(1.0 - alpha) / alpha, 1.0 / alpha);
    for (long i = 0; i < budget; ++i) {
        double s = scale * sample_positive_stable(alpha, rng);
        if (rng.uniform() < std::exp(-lambda * s)) return s;
    }
    throw NumericalError("tempered sampler: rejection budget exceeded (lambda^alpha dt too large)");
}

}  // namespace

double sample_tempered_increment(const TemperedStableSpec& spec, double dt, CounterRng& rng,
                                 const TemperedSamplerConfig& cfg) {
    if (spec.tempering != Tempering::exponential) {
        throw std::invalid_argument("sample_tempered_increment needs exponential tempering");
    }
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const double a = spec.alpha;
    const double intensity = spec.mean_weight() * spec.scale_c;
    if (a < 1.0) {
        double plus = sample_tempered_onesided(a, spec.lambda, intensity, dt, rng,
                                               cfg.rejection_budget);
        double minus = sample_tempered_onesided(a, spec.lambda, intensity, dt, rng,
                                                cfg.rejection_budget);
        return plus - minus;
    }
    // Asmussen-Rosinski: Gaussian substitute below eps, compound Poisson above.
    double eps = cfg.truncation > 0.0 ? cfg.truncation : std::pow(dt, 1.0 / a) / 10.0;
    double var_small = dt * truncated_second_moment(spec, eps);
    double x = std::sqrt(var_small) * rng.normal();
    // Large jumps: rate per side.
    double side_rate = intensity * quad::integrate_to_inf(
                                       [&](double s) {
                                           return std::exp(-spec.lambda * s) *
                                                  std::pow(s, -1.0 - a);
                                       },
                                       eps, 1e-10);
    double mean_jumps = 2.0 * side_rate * dt;
    // Poisson count by inversion.
    int count = 0;
    {
        double u = rng.uniform();
        double pk = std::exp(-mean_jumps), cum = pk;
        while (u > cum && count < 100000) {
            ++count;
            pk *= mean_jumps / count;
            cum += pk;
        }
    }
    for (int j = 0; j < count; ++j) {
        // Pareto proposal s = eps * U^{-1/alpha}, accept with exp(-lambda(s-eps)).
        double s = 0.0;
        long tries = 0;
        for (;;) {
            s = eps * std::pow(rng.uniform(), -1.0 / a);
            if (rng.uniform() < std::exp(-spec.lambda * (s - eps))) break;
            if (++tries > cfg.rejection_budget) {
                throw NumericalError("tempered sampler: jump-size rejection budget exceeded");
            }
        }
        x += rng.uniform() < 0.5 ? s : -s;
    }
    return x;
}

double sample_noise_increment(const TemperedStableSpec& spec, double dt, CounterRng& rng,
                              const TemperedSamplerConfig& cfg) {
    switch (spec.tempering) {
        case Tempering::none:
            return sample_stable_increment(spec.alpha, effective_exponent_scale(spec), dt, rng);
        case Tempering::exponential:
            return sample_tempered_increment(spec, dt, rng, cfg);
        case Tempering::tabulated:
            throw std::invalid_argument("no sampler for tabulated tempering");
    }
    return 0.0;
}

EulerResult euler_simulate(const SimulationPlan& plan) {
    if (plan.n_steps < 1 || plan.n_paths < 1) {
        throw std::invalid_argument("simulation plan needs n_steps >= 1 and n_paths >= 1");
    }
    const double h = (plan.T - plan.t0) / plan.n_steps;
    if (!(h > 0.0)) throw std::invalid_argument("T must exceed t0");
    EulerResult out;
    out.terminal.resize(plan.n_paths);
    long excluded = 0;
    for (long i = 0; i < plan.n_paths; ++i) {
        double x = plan.x0;
        bool ok = true;
        for (int k = 0; k < plan.n_steps; ++k) {
            double tk = plan.t0 + k * h;
            CounterRng rng(plan.seed, static_cast<std::uint64_t>(i),
                           static_cast<std::uint64_t>(k));
            double dz = sample_noise_increment(plan.model.noise, h, rng, plan.sampler);
            x += plan.model.drift(tk, x) * h + plan.model.sigma(tk, x) * dz;
            if (!std::isfinite(x) || std::abs(x) > 1e12) {
                ok = false;
                break;
            }
        }
        if (ok) {
            out.terminal[i] = x;
        } else {
            out.terminal[i] = std::numeric_limits<double>::quiet_NaN();
            ++excluded;
        }
    }
    if (excluded > 0) {
        // Drop flagged paths, keep order.
        std::vector<double> kept;
        kept.reserve(out.terminal.size() - excluded);
        for (double v : out.terminal) {
            if (std::isfinite(v)) kept.push_back(v);
        }
        out.terminal = std::move(kept);
    }
    out.excluded = excluded;
    if (excluded * 10000 >= plan.n_paths) {
        throw NumericalError("euler_simulate: more than 0.01% of paths overflowed");
    }
    return out;
}

DensityEstimate kde(std::span<const double> samples, const Lattice& lattice, double bandwidth) {
    if (samples.size() < 1000) {
        throw std::invalid_argument("kde needs at least 10^3 samples");
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());

    DensityEstimate est;
    est.lattice = lattice;
    if (bandwidth <= 0.0) {
        double q1 = sorted[static_cast<size_t>(0.25 * (n - 1))];
        double q3 = sorted[static_cast<size_t>(0.75 * (n - 1))];
        double iqr = q3 - q1;
        double spread = iqr / 1.349;  // robust scale, never the sample SD
        if (spread <= 0.0) {
            double med = sorted[sorted.size() / 2];
            spread = 1e-6 * (1.0 + std::abs(med));
            est.bandwidth_floored = true;
        }
        bandwidth = 0.9 * spread * std::pow(n, -0.2);
    }
    est.bandwidth = bandwidth;

    const double inv = 1.0 / (bandwidth * std::sqrt(kTwoPi));
    const double rk = 1.0 / (2.0 * std::sqrt(kPi));  // roughness of the Gaussian kernel
    est.values.resize(lattice.count);
    est.std_errors.resize(lattice.count);
    const double window = 8.0 * bandwidth;
    for (size_t j = 0; j < lattice.count; ++j) {
        double x = lattice.point(j);
        auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - window);
        auto hi = std::upper_bound(sorted.begin(), sorted.end(), x + window);
        double acc = 0.0;
        for (auto it = lo; it != hi; ++it) {
            double u = (x - *it) / bandwidth;
            acc += std::exp(-0.5 * u * u);
        }
        double f = acc * inv / n;
        est.values[j] = f;
        est.std_errors[j] = std::sqrt(std::max(f, 0.0) * rk / (n * bandwidth));
    }
    return est;
}

void DensityEstimate::write_csv(const std::string& path, const std::string& config_hash) const {
    std::string tmp = path + ".tmp";
    FILE* f = std::fopen(tmp.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + tmp);
    std::fprintf(f, "# config_hash=%s\n", config_hash.c_str());
    std::fprintf(f, "x,value,se\n");
    for (size_t j = 0; j < values.size(); ++j) {
        std::fprintf(f, "%.17g,%.17g,%.17g\n", lattice.point(j), values[j], std_errors[j]);
    }
    std::fclose(f);
    std::filesystem::rename(tmp, path);
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        double c = cdf(samples[i]);
        d = std::max(d, std::abs(c - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - c));
    }
    return d;
}

double ks_statistic_two(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t i = 0, j = 0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) {
            ++i;
        } else {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_critical(double level, double n_effective) {
    // Asymptotic inverse of the Kolmogorov distribution: c = sqrt(-ln(level/2)/2).
    double c = std::sqrt(-0.5 * std::log(level / 2.0));
    return c / std::sqrt(n_effective);
}

void write_samples(const std::string& path, std::span<const double> samples) {
    std::string tmp = path + ".tmp";
    FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + tmp);
    const char magic[8] = {'P', 'S', 'T', 'A', 'B', 'S', 'M', 'P'};
    std::fwrite(magic, 1, 8, f);
    std::uint64_t count = samples.size();
    std::fwrite(&count, 8, 1, f);
    std::fwrite(samples.data(), sizeof(double), samples.size(), f);
    std::fclose(f);
    std::filesystem::rename(tmp, path);
}

std::vector<double> read_samples(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path);
    char magic[8];
    if (std::fread(magic, 1, 8, f) != 8 || std::memcmp(magic, "PSTABSMP", 8) != 0) {
        std::fclose(f);
        throw std::runtime_error("bad sample file magic in " + path);
    }
    std::uint64_t count = 0;
    if (std::fread(&count, 8, 1, f) != 1) {
        std::fclose(f);
        throw std::runtime_error("truncated sample file " + path);
    }
    std::vector<double> out(count);
    if (std::fread(out.data(), sizeof(double), count, f) != count) {
        std::fclose(f);
        throw std::runtime_error("truncated sample payload in " + path);
    }
    std::fclose(f);
    return out;
}

}  // namespace parastab

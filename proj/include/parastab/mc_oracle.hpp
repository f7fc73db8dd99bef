#pragma once

#include "parastab/grid.hpp"
#include "parastab/sde_model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace parastab {

/// Counter-based random stream: draws for (path i, step k) come from
/// stream(seed, i, k), so batch scheduling never changes the output.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t path, std::uint64_t step);

    double uniform();      // (0, 1)
    double exponential();  // Exp(1)
    double normal();       // N(0, 1)
    std::uint64_t next_u64();

private:
    std::uint64_t state_;
};

/// One draw of a symmetric alpha-stable increment with characteristic
/// function exp(-dt * scale * |p|^alpha), via the polar (CMS) construction.
double sample_stable_increment(double alpha, double scale, double dt, CounterRng& rng);

struct TemperedSamplerConfig {
    double truncation = 0.0;   // Asmussen-Rosinski cutoff; 0 -> dt^{1/alpha}/10
    long rejection_budget = 100000;
};

/// One draw matching exp(dt * phi_Z(p)) for an exponentially tempered spec.
/// alpha < 1: exact exponential tilting of the one-sided stable increments.
/// alpha >= 1: compound-Poisson large jumps plus a Gaussian substitute for
/// the small jumps (variance matched to the truncated second moment); bias
/// O(eps^{2-alpha}).
double sample_tempered_increment(const TemperedStableSpec& spec, double dt, CounterRng& rng,
                                 const TemperedSamplerConfig& cfg = {});

/// One driving-noise increment for the model's spec (dispatches on tempering).
double sample_noise_increment(const TemperedStableSpec& spec, double dt, CounterRng& rng,
                              const TemperedSamplerConfig& cfg = {});

struct SimulationPlan {
    SdeModel model;
    double t0 = 0.0;
    double T = 1.0;
    double x0 = 0.0;
    int n_steps = 100;
    long n_paths = 10000;
    std::uint64_t seed = 1;
    long batch_size = 1 << 16;
    TemperedSamplerConfig sampler;
};

struct EulerResult {
    std::vector<double> terminal;  // ordered by path index
    long excluded = 0;             // non-finite paths dropped
};

/// Euler scheme X_{k+1} = X_k + b dt + sigma dZ with exact increment draws.
EulerResult euler_simulate(const SimulationPlan& plan);

struct DensityEstimate {
    Lattice lattice;
    std::vector<double> values;
    std::vector<double> std_errors;
    double bandwidth = 0.0;
    bool bandwidth_floored = false;

    void write_csv(const std::string& path, const std::string& config_hash) const;
};

/// Gaussian-kernel density estimate with a robust (IQR-based) bandwidth rule;
/// sample variance is never used (heavy tails). bandwidth == 0 selects the
/// rule automatically.
DensityEstimate kde(std::span<const double> samples, const Lattice& lattice,
                    double bandwidth = 0.0);

// --- distribution test helpers --------------------------------------------

/// One-sample Kolmogorov-Smirnov statistic against a CDF (sorts a copy).
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov statistic (sorts copies).
double ks_statistic_two(std::vector<double> a, std::vector<double> b);

/// Asymptotic two-sided critical value c(level)/sqrt(n_eff): level 0.01 -> 1.628.
double ks_critical(double level, double n_effective);

/// Flat little-endian sample file: 8-byte magic "PSTABSMP", u64 count,
/// then count f64 values.
void write_samples(const std::string& path, std::span<const double> samples);
std::vector<double> read_samples(const std::string& path);

}  // namespace parastab

#pragma once

#include "parastab/grid.hpp"
#include "parastab/sde_model.hpp"

namespace parastab {

/// Request for the density of the frozen process on an x-lattice.
struct FrozenDensityRequest {
    SdeModel model;
    double t = 0.0;
    double T = 1.0;
    double y = 0.0;   // freeze point (terminal position)
    Lattice lattice;

    void validate() const;  // throws std::invalid_argument
};

/// Characteristic exponent of the frozen increment:
/// int_t^T phi_Z(sigma(u, y) p) du.
double frozen_exponent(const SdeModel& model, double t, double T, double y, double p);

/// Effective stable time-scale of the frozen process for tempering == none:
/// c_eff * int_t^T sigma(u,y)^alpha du (the exponent is -tau |p|^alpha).
double frozen_stable_scale(const SdeModel& model, double t, double T, double y);

/// Density of the frozen process by Fourier inversion of the characteristic
/// function, with analytic periodization-image removal and a tail-mass
/// completion. Throws ResolutionError when the completed lattice mass leaves
/// [0.99, 1.001].
DensityGrid frozen_density_grid(const FrozenDensityRequest& request);

/// The universal stable-like envelope
/// (T-t)^{-1/alpha} (1 + |y-x|/(T-t)^{1/alpha})^{-(gamma+alpha)} Q(|y-x|).
double pbar(double t, double T, double x, double y, const TemperedStableSpec& spec);

/// Small-jump martingale / large-jump compound-Poisson decomposition of the
/// frozen process.
struct LevyItoSplit {
    double r0 = 0.0;          // truncation radius for the moved jumps
    int k_max = -1;           // Poisson series order; -1 selects from tail_tol
    double tail_tol = 1e-10;  // Poisson tail bound at k_max

    // Filled by levy_ito_reference_density:
    double poisson_rate = 0.0;  // Lambda_total = U * nubar_S(R)
    int k_max_used = 0;

    /// r0 = (T-t)^{1/alpha}.
    static LevyItoSplit standard(const SdeModel& model, double t, double T);
};

/// Reference density through the split: martingale density (Fourier
/// inversion of the truncated-jump exponent) convolved with the truncated
/// compound-Poisson law. Internal consistency oracle for frozen_density_grid.
DensityGrid levy_ito_reference_density(const FrozenDensityRequest& request, LevyItoSplit& split);

// Tail asymptotics of the frozen density, used for periodization images and
// mass completion. Valid for |v| beyond ~10 scale units.
double frozen_tail_density(const SdeModel& model, double t, double T, double y, double v);
double frozen_tail_mass_beyond(const SdeModel& model, double t, double T, double y,
                               double edge_positive);

}  // namespace parastab

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace parastab {

/// Uniform evaluation lattice: points center + (j - count/2) * spacing.
struct Lattice {
    double center = 0.0;
    double half_width = 40.0;
    std::size_t count = 1 << 14;

    double spacing() const { return 2.0 * half_width / static_cast<double>(count); }
    double point(std::size_t j) const {
        return center + (static_cast<double>(j) - static_cast<double>(count) / 2.0) * spacing();
    }
    double left_edge() const { return point(0); }
    double right_edge() const { return point(count - 1); }
    bool power_of_two() const { return count > 0 && (count & (count - 1)) == 0; }
    /// Nearest lattice index (clamped).
    std::size_t index_of(double x) const;
    std::vector<double> points() const;
};

/// Density values on a lattice for fixed (t, T, y), with mass diagnostics.
struct DensityGrid {
    double t = 0.0;
    double T = 1.0;
    double y = 0.0;
    Lattice lattice;
    std::vector<double> values;
    std::vector<double> std_errors;  // optional, parallel to values

    double trapezoid_mass = 0.0;  // lattice trapezoid of values
    double tail_mass = 0.0;       // analytic completion beyond the lattice
    double clip_magnitude = 0.0;  // most negative value removed by clipping
    double imag_residual = 0.0;   // worst discarded imaginary part

    double total_mass() const { return trapezoid_mass + tail_mass; }
    double value_at(double x) const;  // cubic interpolation
    double sup_norm() const;
    void write_csv(const std::string& path, const std::string& config_hash) const;
};

/// Cubic (4-point Lagrange) interpolation on a uniform lattice.
double interp_cubic(const Lattice& lat, const std::vector<double>& v, double x);

}  // namespace parastab

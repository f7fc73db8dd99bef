#pragma once

#include <functional>
#include <vector>

namespace parastab::quad {

using Fn = std::function<double(double)>;

/// Adaptive Gauss-Kronrod integral of f over the bounded interval [a, b].
double integrate(const Fn& f, double a, double b, double rel_tol = 1e-10);

/// Integral of f over [a, +inf) for decaying f. Dyadic blocks from a,
/// stops when a block's contribution falls below tol relative to the sum.
double integrate_to_inf(const Fn& f, double a, double rel_tol = 1e-10);

/// tanh-sinh integral over (a, b] tolerating an integrable singularity at a.
double integrate_singular_left(const Fn& f, double a, double b,
                               double rel_tol = 1e-10);

/// \int_a^inf cos(p*s) g(s) ds for a monotone-ish decaying envelope g.
/// For p*(scale) small falls back to plain block integration; otherwise sums
/// half-period panels until the alternating terms drop below abs_tol.
double oscillatory_cos_tail(const Fn& g, double a, double p,
                            double abs_tol = 1e-12);

/// \int_a^b cos(p*s) g(s) ds on a bounded interval, half-period panels.
double oscillatory_cos_range(const Fn& g, double a, double b, double p);

/// One-dimensional quadrature node with weight.
struct Node {
    double x;
    double w;
};

/// Midpoint mesh on [a, b], graded toward both endpoints with the given
/// exponent: cell boundaries cluster like ((i/n)^grade) from each end.
/// Open rule (no endpoint nodes), suitable for integrable endpoint blow-up.
std::vector<Node> graded_mesh(double a, double b, int n_cells, double grade = 2.0);

/// Gauss-Legendre nodes/weights on [a, b] (n up to 64, composite above).
std::vector<Node> gauss_legendre(double a, double b, int n);

}  // namespace parastab::quad

#include "parastab/quadrature.hpp"
#include "parastab/common.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>

namespace parastab::quad {

double integrate(const Fn& f, double a, double b, double rel_tol) {
    if (a == b) return 0.0;
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, 12, rel_tol, &err);
    if (!std::isfinite(v)) {
        throw NumericalError("quadrature produced non-finite value on [" +
                             std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    return v;
}

double integrate_to_inf(const Fn& f, double a, double rel_tol) {
    // Dyadic blocks [a*2^k, a*2^{k+1}] resolve slowly decaying tails.
    double lo = a > 0 ? a : 1.0;
    double sum = 0.0;
    if (a <= 0) throw NumericalError("integrate_to_inf requires a > 0");
    for (int k = 0; k < 400; ++k) {
        double hi = lo * 2.0;
        double block = integrate(f, lo, hi, rel_tol);
        sum += block;
        if (k > 2 && std::abs(block) < rel_tol * (std::abs(sum) + 1e-300) &&
            std::abs(block) < 1e-300 + rel_tol * rel_tol) {
            break;
        }
        if (k > 6 && std::abs(block) <= rel_tol * std::abs(sum)) break;
        lo = hi;
    }
    return sum;
}

double integrate_singular_left(const Fn& f, double a, double b, double rel_tol) {
    if (a == b) return 0.0;
    boost::math::quadrature::tanh_sinh<double> ts;
    double v = ts.integrate(f, a, b, rel_tol);
    if (!std::isfinite(v)) {
        throw NumericalError("singular quadrature non-finite on [" +
                             std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    return v;
}

double oscillatory_cos_tail(const Fn& g, double a, double p, double abs_tol) {
    p = std::abs(p);
    auto fg = [&](double s) { return std::cos(p * s) * g(s); };

    // Two-term integration-by-parts closure for the far tail:
    //   int_s^inf cos(pu) g(u) du = -g(s) sin(ps)/p - g'(s) cos(ps)/p^2 + O(g''/p^3)
    auto ibp_tail = [&](double s) {
        double ds = 1e-4 * std::max(s, 1.0);
        double gp = (g(s + ds) - g(std::max(s - ds, 0.5 * s))) /
                    (s + ds - std::max(s - ds, 0.5 * s));
        return -g(s) * std::sin(p * s) / p - gp * std::cos(p * s) / (p * p);
    };

    double sum = 0.0;
    double s0 = a;
    // Pre-oscillatory region: fewer than ~1 rad per unit; plain dyadic blocks
    // up to where oscillation sets in.
    if (p * a < 2.0) {
        double s_onset = 2.0 / p;
        double lo = a;
        while (lo * 2.0 < s_onset) {
            sum += integrate(fg, lo, lo * 2.0, 1e-11);
            lo *= 2.0;
        }
        sum += integrate(fg, lo, s_onset, 1e-11);
        s0 = s_onset;
    }
    // Half-period panels (terms alternate once g decays), then IBP closure.
    const double half = kPi / p;
    double prev_abs = 1e300;
    long k = 0;
    for (; k < 4096; ++k) {
        double s1 = s0 + half;
        double term = boost::math::quadrature::gauss<double, 7>::integrate(fg, s0, s1);
        sum += term;
        double ta = std::abs(term);
        if (k > 4 && ta < abs_tol && prev_abs < abs_tol) return sum;
        prev_abs = ta;
        s0 = s1;
    }
    return sum + ibp_tail(s0);
}

double oscillatory_cos_range(const Fn& g, double a, double b, double p) {
    p = std::abs(p);
    if (b <= a) return 0.0;
    auto fg = [&](double s) { return std::cos(p * s) * g(s); };
    const double half = p > 0.0 ? kPi / p : (b - a);
    if (p * (b - a) < 8.0) {
        return integrate(fg, a, b, 1e-11);
    }
    double sum = 0.0, s0 = a;
    while (s0 + half < b) {
        sum += boost::math::quadrature::gauss<double, 7>::integrate(fg, s0, s0 + half);
        s0 += half;
    }
    sum += boost::math::quadrature::gauss<double, 7>::integrate(fg, s0, b);
    return sum;
}

std::vector<Node> graded_mesh(double a, double b, int n_cells, double grade) {
    // Two-sided grading: boundaries cluster at both a and b.
    std::vector<double> edges;
    int half = std::max(1, n_cells / 2);
    edges.reserve(2 * half + 1);
    double mid = 0.5 * (a + b);
    double len = 0.5 * (b - a);
    for (int i = 0; i <= half; ++i) {
        double r = std::pow(static_cast<double>(i) / half, grade);
        edges.push_back(a + len * r);
    }
    for (int i = half - 1; i >= 0; --i) {
        double r = std::pow(static_cast<double>(i) / half, grade);
        edges.push_back(b - len * r);
    }
    (void)mid;
    std::vector<Node> mesh;
    mesh.reserve(edges.size() - 1);
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
        double w = edges[i + 1] - edges[i];
        if (w <= 0) continue;
        mesh.push_back({0.5 * (edges[i] + edges[i + 1]), w});
    }
    return mesh;
}

std::vector<Node> gauss_legendre(double a, double b, int n) {
    using boost::math::quadrature::gauss;
    std::vector<Node> out;
    auto emit = [&](auto gauss_tag, double lo, double hi) {
        using G = decltype(gauss_tag);
        const auto& xs = G::abscissa();  // nonnegative half
        const auto& ws = G::weights();
        double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        // boost stores the nonnegative abscissae; mirror them.
        for (size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] == 0.0) {
                out.push_back({c, ws[i] * h});
            } else {
                out.push_back({c - h * xs[i], ws[i] * h});
                out.push_back({c + h * xs[i], ws[i] * h});
            }
        }
    };
    if (n <= 16) {
        emit(gauss<double, 16>{}, a, b);
    } else if (n <= 32) {
        emit(gauss<double, 32>{}, a, b);
    } else if (n <= 64) {
        emit(gauss<double, 64>{}, a, b);
    } else {
        // Composite panels of 32 points.
        int panels = (n + 31) / 32;
        double h = (b - a) / panels;
        for (int k = 0; k < panels; ++k) {
            emit(gauss<double, 32>{}, a + k * h, a + (k + 1) * h);
        }
    }
    std::sort(out.begin(), out.end(), [](const Node& l, const Node& r) { return l.x < r.x; });
    return out;
}

}  // namespace parastab::quad

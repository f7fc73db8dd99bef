#include "parastab/parametrix.hpp"
#include "parastab/common.hpp"
#include "parastab/fft.hpp"
#include "parastab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace parastab {

using cd = std::complex<double>;
using cvec = std::vector<cd>;

double ParametrixConfig::omega_for(const SdeModel& model) const {
    if (omega > 0.0) return omega;
    return model.declared_eta * std::min(model.noise.alpha, 1.0) / model.noise.alpha;
}

std::vector<std::string> ParametrixConfig::validate(const SdeModel& model) const {
    if (k_max < 1) throw ConfigError("k_max must be >= 1");
    if (!(tail_tol > 0.0)) throw ConfigError("tail_tol must be positive");
    if (time_nodes < 4) throw ConfigError("time_nodes must be at least 4");
    if (!(delta_cap > 0.0)) throw ConfigError("delta_cap must be positive");
    if (omega < 0.0 || omega > 1.0) throw ConfigError("omega must lie in (0, 1]");
    if (!series_lattice.power_of_two()) {
        throw ConfigError("series lattice count must be a power of two");
    }
    std::vector<std::string> warn;
    double def = model.declared_eta * std::min(model.noise.alpha, 1.0) / model.noise.alpha;
    if (omega > 0.0 && std::abs(omega - def) > 1e-12) {
        warn.push_back("omega != eta(alpha^1)/alpha: rho_m may not majorize the terms");
    }
    return warn;
}

std::complex<double> generator_symbol(const SdeModel& model, double t, double z, double p) {
    return {levy_exponent(model.noise, model.sigma(t, z) * p), model.drift(t, z) * p};
}

namespace {

double regularity_exponent(const SdeModel& m) {
    return m.declared_eta * std::min(m.noise.alpha, 1.0);
}

double holder_cap(double dist, const SdeModel& m, const ParametrixConfig& cfg) {
    if (dist <= 0.0) return 0.0;
    return std::min(cfg.delta_cap, std::pow(dist, regularity_exponent(m)));
}

}  // namespace

double rho_weight(double t, double T, double x, double y, const SdeModel& model,
                  const ParametrixConfig& cfg) {
    return holder_cap(std::abs(y - x), model, cfg) * pbar(t, T, x, y, model.noise);
}

double hbar(double t, double T, double x, double y, const SdeModel& model,
            const ParametrixConfig& cfg) {
    return holder_cap(std::abs(y - x), model, cfg) / (T - t) * pbar(t, T, x, y, model.noise);
}

double rho_m(double t, double T, double x, double y, int m, const ParametrixConfig& cfg,
             const SdeModel& model) {
    if (m < 0) throw std::invalid_argument("rho_m needs m >= 0");
    const double w = cfg.omega_for(model);
    const double pb = pbar(t, T, x, y, model.noise);
    const double rho = rho_weight(t, T, x, y, model, cfg);
    const double dt = T - t;
    auto fact = [](int n) {
        double f = 1.0;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    if (m % 2 == 0) {
        int k = m / 2;
        return std::pow(dt, k * w) / (fact(k) * std::pow(w, 2 * k)) *
               (std::pow(dt, k * w) * pb + (pb + rho));
    }
    int k = (m - 1) / 2;
    return std::pow(dt, k * w) / (fact(k + 1) * std::pow(w, 2 * k + 1)) *
           (std::pow(dt, (k + 1) * w) * pb + std::pow(dt, w) * (pb + rho) + rho);
}

double kernel_H(const SdeModel& model, double t, double T, double x, double y,
                const ParametrixConfig& cfg) {
    if (!(T > t)) throw std::invalid_argument("kernel_H requires T > t");
    if (x == y) return 0.0;
    const double u = y - x;
    const double sx = model.sigma(t, x), sy = model.sigma(t, y);
    const double db = model.drift(t, x) - model.drift(t, y);
    if (sx == sy && db == 0.0) return 0.0;

    auto psi = [&](double p) { return frozen_exponent(model, t, T, y, p); };
    double P = 1.0;
    while (psi(P) > -45.0) {
        P *= 2.0;
        if (P > 1e9) throw ResolutionError("kernel_H: frequency budget overflow");
    }
    int n = std::clamp(static_cast<int>(P * (std::abs(u) + 1.0)),
                       cfg.freq_nodes, 40000);
    auto nodes = quad::gauss_legendre(0.0, P, n);
    double acc = 0.0;
    for (const auto& nd : nodes) {
        double p = nd.x;
        double dphi = levy_exponent(model.noise, sx * p) - levy_exponent(model.noise, sy * p);
        double val = (dphi * std::cos(p * u) + db * p * std::sin(p * u)) * std::exp(psi(p));
        acc += nd.w * val;
    }
    return acc / kPi;
}

// ---------------------------------------------------------------------------
// Series engine. Spatial fields live on the series lattice; convolutions run
// through zero-padded FFTs against spectral multipliers. The scale dependence
// of symbol and frozen characteristic function is separated with Chebyshev
// cardinal interpolation in the sigma value, which keeps every kernel
// application a fixed small number of FFTs. Requires time-homogeneous
// coefficients.
// ---------------------------------------------------------------------------

namespace {

struct TimeMesh {
    std::vector<double> edges;   // cells+1
    std::vector<double> nodes;   // midpoints
    std::vector<double> widths;  // cell widths
};

TimeMesh build_time_mesh(double t, double T, int cells, double grade) {
    TimeMesh m;
    int half = std::max(2, cells / 2);
    m.edges.reserve(2 * half + 1);
    double len = 0.5 * (T - t);
    for (int i = 0; i <= half; ++i) {
        m.edges.push_back(t + len * std::pow(static_cast<double>(i) / half, grade));
    }
    for (int i = half - 1; i >= 0; --i) {
        m.edges.push_back(T - len * std::pow(static_cast<double>(i) / half, grade));
    }
    for (size_t i = 0; i + 1 < m.edges.size(); ++i) {
        m.nodes.push_back(0.5 * (m.edges[i] + m.edges[i + 1]));
        m.widths.push_back(m.edges[i + 1] - m.edges[i]);
    }
    return m;
}

struct SymbolTerm {
    std::vector<double> beta;  // weight on the lattice
    double beta_y = 0.0;       // weight at the freeze point
    cvec g;                    // frequency profile on the folded grid
    double parity = 1.0;       // +1 even profile, -1 odd (drift)
};

struct Engine {
    const SdeModel& model;
    const ParametrixConfig& cfg;
    double t, T, y;

    size_t ns, np;
    double hs, z0;
    std::vector<double> zpts;
    std::vector<double> freqs;   // folded, size np

    std::vector<double> sig;     // sigma on lattice
    double sig_y = 1.0;

    int K = 1;                           // Chebyshev nodes in sigma
    std::vector<double> signodes;        // K
    std::vector<std::vector<double>> card;  // K x ns cardinal values
    std::vector<double> card_y;             // K
    std::vector<std::vector<double>> PHI;   // K x np: phi_Z(sig_k q)
    std::vector<double> PHI_y;              // np

    std::vector<SymbolTerm> sym;
    TimeMesh mesh;
    std::vector<double> pbar_w;  // pbar on the lattice

    using Field = std::vector<std::vector<double>>;  // nodes x ns

    Engine(const SdeModel& mdl, const ParametrixConfig& c, double t_, double T_, double y_)
        : model(mdl), cfg(c), t(t_), T(T_), y(y_) {
        if (!model.time_homogeneous()) {
            throw ConfigError(
                "series engine requires time-homogeneous coefficients (the frozen "
                "density and kernel support time dependence)");
        }
        const Lattice& lat = cfg.series_lattice;
        ns = lat.count;
        np = 2 * ns;
        hs = lat.spacing();
        z0 = lat.point(0);
        zpts = lat.points();

        const double dq = kTwoPi / (static_cast<double>(np) * hs);
        freqs.resize(np);
        for (size_t m = 0; m < np; ++m) {
            long k = static_cast<long>(m) <= static_cast<long>(np / 2) - 1
                         ? static_cast<long>(m)
                         : static_cast<long>(m) - static_cast<long>(np);
            freqs[m] = dq * static_cast<double>(k);
        }

        sig.resize(ns);
        double lo = 1e300, hi = -1e300;
        for (size_t j = 0; j < ns; ++j) {
            sig[j] = model.sigma(t, zpts[j]);
            lo = std::min(lo, sig[j]);
            hi = std::max(hi, sig[j]);
        }
        sig_y = model.sigma(t, y);
        lo = std::min(lo, sig_y);
        hi = std::max(hi, sig_y);

        const bool degenerate = (hi - lo) < 1e-12 * std::max(1.0, hi);
        K = degenerate ? 1 : cfg.sigma_cheb_order;
        signodes.resize(K);
        if (K == 1) {
            signodes[0] = 0.5 * (lo + hi);
        } else {
            double mid = 0.5 * (lo + hi), rad = 0.5 * (hi - lo) * (1.0 + 1e-9);
            for (int k = 0; k < K; ++k) {
                signodes[k] = mid + rad * std::cos(kPi * (k + 0.5) / K);
            }
        }
        card.assign(K, std::vector<double>(ns, 0.0));
        card_y.assign(K, 0.0);
        if (K == 1) {
            std::fill(card[0].begin(), card[0].end(), 1.0);
            card_y[0] = 1.0;
        } else {
            auto cardinal = [&](double x, std::vector<double>& out) {
                // Barycentric form on Chebyshev points of the first kind.
                for (int k = 0; k < K; ++k) {
                    if (x == signodes[k]) {
                        std::fill(out.begin(), out.end(), 0.0);
                        out[k] = 1.0;
                        return;
                    }
                }
                double denom = 0.0;
                for (int k = 0; k < K; ++k) {
                    double wk = (k % 2 == 0 ? 1.0 : -1.0) * std::sin(kPi * (k + 0.5) / K);
                    out[k] = wk / (x - signodes[k]);
                    denom += out[k];
                }
                for (int k = 0; k < K; ++k) out[k] /= denom;
            };
            std::vector<double> tmp(K);
            for (size_t j = 0; j < ns; ++j) {
                cardinal(sig[j], tmp);
                for (int k = 0; k < K; ++k) card[k][j] = tmp[k];
            }
            cardinal(sig_y, tmp);
            card_y = tmp;
        }

        PHI.assign(K, std::vector<double>(np, 0.0));
        for (int k = 0; k < K; ++k) {
            for (size_t m = 0; m < np; ++m) {
                PHI[k][m] = levy_exponent(model.noise, signodes[k] * freqs[m]);
            }
        }
        PHI_y.resize(np);
        for (size_t m = 0; m < np; ++m) {
            PHI_y[m] = levy_exponent(model.noise, sig_y * freqs[m]);
        }

        build_symbol_terms();
        mesh = build_time_mesh(t, T, cfg.time_nodes, cfg.time_grade);

        pbar_w.resize(ns);
        for (size_t j = 0; j < ns; ++j) pbar_w[j] = pbar(t, T, zpts[j], y, model.noise);
    }

    void build_symbol_terms() {
        // Drift part i b(z) q.
        double bmax = std::abs(model.drift(t, y));
        std::vector<double> bvals(ns);
        for (size_t j = 0; j < ns; ++j) {
            bvals[j] = model.drift(t, zpts[j]);
            bmax = std::max(bmax, std::abs(bvals[j]));
        }
        if (bmax > 1e-15) {
            SymbolTerm dterm;
            dterm.beta = bvals;
            dterm.beta_y = model.drift(t, y);
            dterm.g.resize(np);
            for (size_t m = 0; m < np; ++m) dterm.g[m] = cd(0.0, freqs[m]);
            dterm.parity = -1.0;
            sym.push_back(std::move(dterm));
        }
        // Jump part phi_Z(sigma(z) q).
        double srange = 0.0;
        for (size_t j = 0; j < ns; ++j) srange = std::max(srange, std::abs(sig[j] - sig_y));
        if (srange > 1e-14) {
            if (model.noise.tempering == Tempering::none) {
                // Exact separation: phi_Z(sigma q) = sigma^alpha * (-c |q|^alpha).
                SymbolTerm sterm;
                sterm.beta.resize(ns);
                const double a = model.noise.alpha;
                for (size_t j = 0; j < ns; ++j) sterm.beta[j] = std::pow(sig[j], a);
                sterm.beta_y = std::pow(sig_y, a);
                sterm.g.resize(np);
                const double ce = effective_exponent_scale(model.noise);
                for (size_t m = 0; m < np; ++m) {
                    sterm.g[m] = -ce * std::pow(std::abs(freqs[m]), a);
                }
                sym.push_back(std::move(sterm));
            } else {
                for (int k = 0; k < K; ++k) {
                    SymbolTerm cterm;
                    cterm.beta = card[k];
                    cterm.beta_y = card_y[k];
                    cterm.g.resize(np);
                    for (size_t m = 0; m < np; ++m) cterm.g[m] = PHI[k][m];
                    sym.push_back(std::move(cterm));
                }
            }
        }
    }

    bool has_corrections() const { return !sym.empty(); }

    cvec forward(const std::vector<double>& field) const {
        cvec a(np, cd(0.0, 0.0));
        for (size_t j = 0; j < ns; ++j) a[j] = field[j];
        fft::transform(a, -1);
        return a;
    }

    std::vector<double> backward(cvec spec) const {
        fft::transform(spec, +1);
        std::vector<double> out(ns);
        const double scale = 1.0 / static_cast<double>(np);
        for (size_t j = 0; j < ns; ++j) out[j] = spec[j].real() * scale;
        return out;
    }

    // exp(dt * PHI[k]) into buf.
    void exp_profile(const std::vector<double>& phi, double dt, std::vector<double>& buf) const {
        buf.resize(np);
        for (size_t m = 0; m < np; ++m) buf[m] = std::exp(dt * phi[m]);
    }

    /// Frozen density on the series lattice (plain inversion, no image pass).
    std::vector<double> term0() const {
        cvec mult(np);
        for (size_t m = 0; m < np; ++m) mult[m] = std::exp((T - t) * PHI_y[m]);
        auto vals = fft::invert_spectrum_vec(mult, hs, z0 - y);
        vals.resize(ns);
        return vals;
    }

    /// G_1(v, w) = H(v, T, w, y) for every mesh node v.
    Field build_kernel_level() const {
        Field g(mesh.nodes.size(), std::vector<double>(ns, 0.0));
        std::vector<double> ebuf;
        for (size_t j = 0; j < mesh.nodes.size(); ++j) {
            double dt = T - mesh.nodes[j];
            exp_profile(PHI_y, dt, ebuf);
            for (const auto& s : sym) {
                cvec mult(np);
                for (size_t m = 0; m < np; ++m) mult[m] = s.g[m] * ebuf[m];
                auto k = fft::invert_spectrum_vec(mult, hs, z0 - y);
                for (size_t zj = 0; zj < ns; ++zj) {
                    g[j][zj] += (s.beta[zj] - s.beta_y) * s.parity * k[zj];
                }
            }
        }
        return g;
    }

    /// F[l_k . G(v)] for every node and Chebyshev index (shared by the next
    /// level and by term assembly).
    std::vector<std::vector<cvec>> level_transforms(const Field& g) const {
        std::vector<std::vector<cvec>> fl(g.size());
        std::vector<double> tmp(ns);
        for (size_t j = 0; j < g.size(); ++j) {
            fl[j].reserve(K);
            for (int k = 0; k < K; ++k) {
                for (size_t zj = 0; zj < ns; ++zj) tmp[zj] = card[k][zj] * g[j][zj];
                fl[j].push_back(forward(tmp));
            }
        }
        return fl;
    }

    /// term_k(z) = int_t^T du  int ptilde(t,u,z,w) G_k(u,w) dw.
    std::vector<double> assemble_term(const std::vector<std::vector<cvec>>& fl) const {
        cvec acc(np, cd(0.0, 0.0));
        std::vector<double> ebuf;
        for (size_t i = 0; i < mesh.nodes.size(); ++i) {
            double w = mesh.widths[i];
            double dt = mesh.nodes[i] - t;
            for (int k = 0; k < K; ++k) {
                exp_profile(PHI[k], dt, ebuf);
                const cvec& f = fl[i][k];
                for (size_t m = 0; m < np; ++m) acc[m] += w * ebuf[m] * f[m];
            }
        }
        return backward(std::move(acc));
    }

    /// G_{k+1}(u, z) = int_u^T dv int H(u,v,z,w) G_k(v,w) dw.
    Field next_level(const Field& g, const std::vector<std::vector<cvec>>& fl) const {
        const size_t nt = mesh.nodes.size();
        const size_t nsym = sym.size();
        // Per-u spectral accumulators: one per symbol term plus the cross sum.
        std::vector<std::vector<cvec>> acc(nt, std::vector<cvec>(nsym + 1, cvec(np, cd(0.0, 0.0))));
        std::vector<double> tmp(ns), ebuf;
        std::vector<cvec> fbeta(nsym * static_cast<size_t>(K));

        for (size_t j = 0; j < nt; ++j) {
            // Transforms of beta_m l_k G(v_j).
            for (size_t m = 0; m < nsym; ++m) {
                for (int k = 0; k < K; ++k) {
                    for (size_t zj = 0; zj < ns; ++zj) {
                        tmp[zj] = sym[m].beta[zj] * card[k][zj] * g[j][zj];
                    }
                    fbeta[m * K + k] = forward(tmp);
                }
            }
            for (size_t i = 0; i <= j; ++i) {
                double u_i = mesh.nodes[i];
                double wj = mesh.edges[j + 1] - std::max(mesh.edges[j], u_i);
                if (wj <= 0.0) continue;
                double dt = std::max(mesh.nodes[j] - u_i, 0.0);
                // S1 = sum_k E_k F[l_k G]; S2_m = sum_k E_k F[beta_m l_k G].
                cvec s1(np, cd(0.0, 0.0));
                std::vector<cvec> s2(nsym, cvec(np, cd(0.0, 0.0)));
                for (int k = 0; k < K; ++k) {
                    exp_profile(PHI[k], dt, ebuf);
                    const cvec& f = fl[j][k];
                    for (size_t m = 0; m < np; ++m) s1[m] += ebuf[m] * f[m];
                    for (size_t msym = 0; msym < nsym; ++msym) {
                        const cvec& fb = fbeta[msym * K + k];
                        cvec& dst = s2[msym];
                        for (size_t m = 0; m < np; ++m) dst[m] += ebuf[m] * fb[m];
                    }
                }
                for (size_t msym = 0; msym < nsym; ++msym) {
                    const cvec& gm = sym[msym].g;
                    cvec& am = acc[i][msym];
                    cvec& alast = acc[i][nsym];
                    for (size_t m = 0; m < np; ++m) {
                        am[m] += wj * gm[m] * s1[m];
                        alast[m] += wj * gm[m] * s2[msym][m];
                    }
                }
            }
        }
        Field out(nt, std::vector<double>(ns, 0.0));
        for (size_t i = 0; i < nt; ++i) {
            for (size_t msym = 0; msym < nsym; ++msym) {
                auto part = backward(std::move(acc[i][msym]));
                for (size_t zj = 0; zj < ns; ++zj) {
                    out[i][zj] += sym[msym].beta[zj] * part[zj];
                }
            }
            auto cross = backward(std::move(acc[i][nsym]));
            for (size_t zj = 0; zj < ns; ++zj) out[i][zj] -= cross[zj];
        }
        return out;
    }
};

}  // namespace

SeriesResult parametrix_series(const SdeModel& model, double t, double T, double y,
                               const Lattice& x_lattice, const ParametrixConfig& cfg) {
    cfg.validate(model);
    if (!(T > t)) throw std::invalid_argument("parametrix_series requires T > t");

    SeriesResult res;
    res.series_lattice = cfg.series_lattice;

    // Frozen part on the requested lattice (image-corrected, mass-checked).
    FrozenDensityRequest freq_request{model, t, T, y, x_lattice};
    DensityGrid frozen = frozen_density_grid(freq_request);

    Engine eng(model, cfg, t, T, y);
    std::vector<double> t0 = eng.term0();
    res.term_fields.push_back(t0);
    {
        SeriesTerm s;
        s.order = 0;
        for (size_t j = 0; j < t0.size(); ++j) {
            s.sup_norm = std::max(s.sup_norm, std::abs(t0[j]));
            s.weighted_sup_norm = std::max(s.weighted_sup_norm, std::abs(t0[j]) / eng.pbar_w[j]);
        }
        res.terms.push_back(s);
    }

    std::vector<double> corrections(cfg.series_lattice.count, 0.0);
    if (eng.has_corrections()) {
        Engine::Field g = eng.build_kernel_level();
        double prev_sup = res.terms[0].sup_norm;
        int consecutive_growth = 0;
        for (int k = 1; k <= cfg.k_max; ++k) {
            auto fl = eng.level_transforms(g);
            std::vector<double> term = eng.assemble_term(fl);
            SeriesTerm s;
            s.order = k;
            for (size_t j = 0; j < term.size(); ++j) {
                s.sup_norm = std::max(s.sup_norm, std::abs(term[j]));
                s.weighted_sup_norm =
                    std::max(s.weighted_sup_norm, std::abs(term[j]) / eng.pbar_w[j]);
            }
            s.ratio = prev_sup > 0.0 ? s.sup_norm / prev_sup : 0.0;
            res.terms.push_back(s);
            res.term_fields.push_back(term);
            for (size_t j = 0; j < term.size(); ++j) corrections[j] += term[j];
            res.orders_used = k;

            if (k >= 2 && s.ratio >= 1.0) {
                ++consecutive_growth;
                if (consecutive_growth >= 2) {
                    throw DivergenceError(
                        "series terms stopped contracting (ratio >= 1 twice); "
                        "reduce the horizon T - t");
                }
            } else {
                consecutive_growth = 0;
            }
            prev_sup = s.sup_norm;
            if (s.weighted_sup_norm < cfg.tail_tol) break;
            if (k < cfg.k_max) g = eng.next_level(g, fl);
        }
    }

    // Final density: frozen fine grid plus interpolated corrections.
    res.density = frozen;
    double worst_neg = 0.0;
    for (size_t j = 0; j < x_lattice.count; ++j) {
        double x = x_lattice.point(j);
        double corr = eng.has_corrections()
                          ? interp_cubic(cfg.series_lattice, corrections, x)
                          : 0.0;
        double v = frozen.values[j] + corr;
        if (v < 0.0) {
            worst_neg = std::min(worst_neg, v);
            v = 0.0;
        }
        res.density.values[j] = v;
    }
    res.density.clip_magnitude = -worst_neg;
    double sum = 0.0;
    for (double v : res.density.values) sum += v;
    sum -= 0.5 * (res.density.values.front() + res.density.values.back());
    res.density.trapezoid_mass = sum * x_lattice.spacing();
    return res;
}

ConvolveResult space_time_convolve(const SpaceTimeField& f, const SpaceTimeField& g,
                                   double t, double T, const Lattice& x_lattice, double y,
                                   const ParametrixConfig& cfg) {
    if (!(T > t)) throw std::invalid_argument("space_time_convolve requires T > t");
    const Lattice& zlat = cfg.series_lattice;
    auto zpts = zlat.points();
    const double hz = zlat.spacing();

    auto run = [&](int cells) {
        TimeMesh mesh = build_time_mesh(t, T, cells, cfg.time_grade);
        std::vector<double> out(x_lattice.count, 0.0);
        for (size_t i = 0; i < mesh.nodes.size(); ++i) {
            double u = mesh.nodes[i], w = mesh.widths[i];
            for (size_t xi = 0; xi < x_lattice.count; ++xi) {
                double x = x_lattice.point(xi);
                double acc = 0.0;
                double first = 0.0, last = 0.0;
                for (size_t zj = 0; zj < zpts.size(); ++zj) {
                    double val = f(t, u, x, zpts[zj]) * g(u, T, zpts[zj], y);
                    acc += val;
                    if (zj == 0) first = val;
                    if (zj + 1 == zpts.size()) last = val;
                }
                acc -= 0.5 * (first + last);
                double integral = acc * hz;
                // Power-tail completion from the two edge values.
                auto tail = [&](double v_edge, double v_in, double edge_abs) {
                    if (v_edge <= 0.0 || v_in <= v_edge || edge_abs <= 0.0) return 0.0;
                    double k = std::log(v_in / v_edge) / std::log((edge_abs - hz) / edge_abs);
                    if (k <= 1.0 + 1e-9) return 0.0;
                    return v_edge * edge_abs / (k - 1.0);
                };
                double vl1 = f(t, u, x, zpts[1]) * g(u, T, zpts[1], y);
                double vr1 = f(t, u, x, zpts[zpts.size() - 2]) * g(u, T, zpts[zpts.size() - 2], y);
                integral += tail(first, vl1, std::abs(zpts.front()));
                integral += tail(last, vr1, std::abs(zpts.back()));
                out[xi] += w * integral;
            }
        }
        return out;
    };

    ConvolveResult res;
    res.values = run(cfg.time_nodes);
    auto doubled = run(2 * cfg.time_nodes);
    double delta = 0.0, scale = 0.0;
    for (size_t i = 0; i < res.values.size(); ++i) {
        delta = std::max(delta, std::abs(res.values[i] - doubled[i]));
        scale = std::max(scale, std::abs(doubled[i]));
    }
    res.values = doubled;
    res.mesh_delta = delta;
    res.mesh_converged = delta <= 1e-6 * std::max(1.0, scale);
    if (!res.mesh_converged) {
        throw NumericalError("space_time_convolve: mesh doubling moved results by " +
                             std::to_string(delta));
    }
    return res;
}

StabilityReport stability_ratio(const PerturbationSequence& seq, double t, double T,
                                double y, const Lattice& x_lattice,
                                const ParametrixConfig& cfg) {
    if (seq.perturbed.empty()) throw std::invalid_argument("empty perturbation sequence");
    StabilityReport rep;

    SeriesResult base = parametrix_series(seq.base, t, T, y, x_lattice, cfg);
    FrozenDensityRequest base_req{seq.base, t, T, y, x_lattice};
    DensityGrid base_frozen = frozen_density_grid(base_req);

    // Kernel probe grid.
    double w = std::min(8.0, x_lattice.half_width);
    std::vector<double> probes;
    for (int i = 0; i < 21; ++i) {
        probes.push_back(x_lattice.center - w + 2.0 * w * i / 20.0);
    }

    std::vector<double> pb(x_lattice.count);
    for (size_t j = 0; j < x_lattice.count; ++j) {
        pb[j] = pbar(t, T, x_lattice.point(j), y, seq.base.noise);
    }

    double prev_sup = std::numeric_limits<double>::infinity();
    rep.monotone_sup = true;
    for (size_t idx = 0; idx < seq.perturbed.size(); ++idx) {
        const SdeModel& pert = seq.perturbed[idx];
        StabilityRow row;
        row.n = idx < seq.indices.size() ? seq.indices[idx] : static_cast<int>(idx);

        double delta;
        if (idx < seq.measured_delta.size()) {
            delta = seq.measured_delta[idx];
        } else {
            auto fam = DeltaTestFamily::dyadic(x_lattice.center - x_lattice.half_width,
                                               x_lattice.center + x_lattice.half_width, 41, t);
            fam.delta_cap = cfg.delta_cap;
            delta = estimate_delta_n(seq.base, pert, fam).delta;
        }
        row.delta_n = delta;

        SeriesResult ps = parametrix_series(pert, t, T, y, x_lattice, cfg);
        double sup_diff = 0.0;
        for (size_t j = 0; j < x_lattice.count; ++j) {
            sup_diff = std::max(sup_diff,
                                std::abs(base.density.values[j] - ps.density.values[j]));
        }
        row.sup_density_diff = sup_diff;

        if (delta <= 0.0) {
            if (sup_diff > 1e-9) {
                throw InconsistencyError(
                    "measured Delta_n = 0 but densities differ by " + std::to_string(sup_diff) +
                    " (perturbation invisible to the finite test family)");
            }
            row.exact_match = true;
            rep.rows.push_back(row);
            continue;
        }

        FrozenDensityRequest pert_req{pert, t, T, y, x_lattice};
        DensityGrid pert_frozen = frozen_density_grid(pert_req);
        for (size_t j = 0; j < x_lattice.count; ++j) {
            row.r_density = std::max(row.r_density,
                                     std::abs(base.density.values[j] - ps.density.values[j]) /
                                         (delta * pb[j]));
            row.r_frozen = std::max(row.r_frozen,
                                    std::abs(base_frozen.values[j] - pert_frozen.values[j]) /
                                        (delta * pb[j]));
        }
        for (double px : probes) {
            for (double py : probes) {
                if (std::abs(px - py) < 1e-9) continue;
                double hb = hbar(t, T, px, py, seq.base, cfg);
                if (!(hb > 0.0)) continue;
                double dh = kernel_H(seq.base, t, T, px, py, cfg) -
                            kernel_H(pert, t, T, px, py, cfg);
                row.r_kernel = std::max(row.r_kernel, std::abs(dh) / (delta * hb));
            }
        }
        if (sup_diff > prev_sup * (1.0 + 1e-9)) rep.monotone_sup = false;
        prev_sup = sup_diff;
        rep.rows.push_back(row);
    }

    std::vector<double> ratios;
    for (const auto& r : rep.rows) {
        if (!r.exact_match) ratios.push_back(r.r_density);
    }
    if (!ratios.empty()) {
        std::vector<double> sorted = ratios;
        std::sort(sorted.begin(), sorted.end());
        double median = sorted[sorted.size() / 2];
        double maxr = sorted.back();
        rep.bounded_verdict = maxr <= 2.0 * median;
    } else {
        rep.bounded_verdict = true;
    }
    return rep;
}

}  // namespace parastab

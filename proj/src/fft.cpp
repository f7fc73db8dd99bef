#include "parastab/fft.hpp"
#include "parastab/common.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>

namespace parastab::fft {

namespace {

// One cached in-place plan per (size, sign). Single-threaded by design.
struct PlanSlot {
    fftw_complex* buf = nullptr;
    fftw_plan plan = nullptr;
    std::size_t n = 0;
    ~PlanSlot() {
        if (plan) fftw_destroy_plan(plan);
        if (buf) fftw_free(buf);
    }
};

PlanSlot& slot_for(std::size_t n, int sign) {
    static std::map<std::pair<std::size_t, int>, PlanSlot> cache;
    PlanSlot& s = cache[{n, sign}];
    if (!s.plan) {
        s.buf = fftw_alloc_complex(n);
        s.n = n;
        s.plan = fftw_plan_dft_1d(static_cast<int>(n), s.buf, s.buf,
                                  sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                  FFTW_ESTIMATE);
    }
    return s;
}

}  // namespace

void transform(cvec& a, int sign) {
    if (a.empty()) return;
    PlanSlot& s = slot_for(a.size(), sign);
    std::memcpy(s.buf, a.data(), a.size() * sizeof(fftw_complex));
    fftw_execute(s.plan);
    std::memcpy(a.data(), s.buf, a.size() * sizeof(fftw_complex));
}

namespace {

std::vector<double> invert_prepared(cvec& in, double h, double u0, double* imag_residual) {
    const std::size_t n = in.size();
    const double dp = kTwoPi / (static_cast<double>(n) * h);
    const auto half = static_cast<long>(n / 2);
    for (std::size_t m = 0; m < n; ++m) {
        long k = static_cast<long>(m) <= half - 1 ? static_cast<long>(m)
                                                  : static_cast<long>(m) - static_cast<long>(n);
        double p = dp * static_cast<double>(k);
        // Phase shift moves the evaluation origin to u0.
        in[m] *= std::exp(std::complex<double>(0.0, -p * u0));
    }
    transform(in, -1);
    std::vector<double> out(n);
    double worst = 0.0;
    const double scale = dp / kTwoPi;  // = 1/(n h)
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = in[j].real() * scale;
        double im = std::abs(in[j].imag()) * scale;
        if (im > worst) worst = im;
    }
    if (imag_residual) *imag_residual = worst;
    return out;
}

}  // namespace

std::vector<double> invert_spectrum(const std::function<std::complex<double>(double)>& multiplier,
                                    std::size_t n, double h, double u0,
                                    double* imag_residual) {
    const double dp = kTwoPi / (static_cast<double>(n) * h);
    cvec in(n);
    const auto half = static_cast<long>(n / 2);
    for (std::size_t m = 0; m < n; ++m) {
        long k = static_cast<long>(m) <= half - 1 ? static_cast<long>(m)
                                                  : static_cast<long>(m) - static_cast<long>(n);
        in[m] = multiplier(dp * static_cast<double>(k));
    }
    return invert_prepared(in, h, u0, imag_residual);
}

std::vector<double> invert_spectrum_vec(const cvec& multiplier, double h, double u0,
                                        double* imag_residual) {
    cvec in = multiplier;
    return invert_prepared(in, h, u0, imag_residual);
}

}  // namespace parastab::fft

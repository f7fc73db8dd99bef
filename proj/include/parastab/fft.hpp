#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace parastab::fft {

using cvec = std::vector<std::complex<double>>;

/// In-place complex DFT. sign = -1: forward (e^{-2pi i jk/N}); +1: backward.
/// No normalization is applied.
void transform(cvec& a, int sign);

/// Evaluates f(u_j) = (1/2pi) \int M(p) e^{-i p u_j} dp on u_j = u0 + j*h,
/// j = 0..n-1, from samples of the spectral multiplier M at the DFT
/// frequencies p_k = 2 pi k/(n h), k = -n/2..n/2-1. `multiplier` is called
/// with p_k once per frequency. Returns the real part; the largest |imag|
/// residual is written to imag_residual when non-null.
std::vector<double> invert_spectrum(const std::function<std::complex<double>(double)>& multiplier,
                                    std::size_t n, double h, double u0,
                                    double* imag_residual = nullptr);

/// Same, with the multiplier pre-sampled on the folded DFT frequency grid
/// (index m holds p = 2 pi k/(n h), k = m for m < n/2, else m - n).
std::vector<double> invert_spectrum_vec(const cvec& multiplier, double h, double u0,
                                        double* imag_residual = nullptr);

}  // namespace parastab::fft

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sca2d {

using cplx = std::complex<double>;

/// Textbook O(N^2) DFT: X_k = sum_n x_n exp(-2*pi*i*k*n/N).
std::vector<cplx> dft_naive(const std::vector<cplx>& x);

/// Forward DFT. Power-of-two lengths go through an iterative radix-2
/// Cooley-Tukey transform, everything else falls back to the naive sum.
std::vector<cplx> dft(const std::vector<cplx>& x);
std::vector<cplx> dft_real(const std::vector<double>& x);

/// Symmetric Hann window, w[n] = 0.5 * (1 - cos(2*pi*n/(L-1))).
/// length must be at least 2.
std::vector<double> hann_window(std::size_t length);

}  // namespace sca2d

#include "sca2d/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sca2d {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, bit-reversal permutation first.
void fft_pow2(std::vector<cplx>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const cplx wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

}  // namespace

std::vector<cplx> dft_naive(const std::vector<cplx>& x) {
  const std::size_t n = x.size();
  std::vector<cplx> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc(0.0, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(m) / static_cast<double>(n);
      acc += x[m] * cplx(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

std::vector<cplx> dft(const std::vector<cplx>& x) {
  if (x.empty()) throw std::invalid_argument("empty signal");
  if (!is_pow2(x.size())) return dft_naive(x);
  std::vector<cplx> a = x;
  fft_pow2(a);
  return a;
}

std::vector<cplx> dft_real(const std::vector<double>& x) {
  std::vector<cplx> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = cplx(x[i], 0.0);
  return dft(c);
}

std::vector<double> hann_window(std::size_t length) {
  if (length < 2) throw std::invalid_argument("window length must be >= 2");
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                 static_cast<double>(length - 1)));
  return w;
}

}  // namespace sca2d

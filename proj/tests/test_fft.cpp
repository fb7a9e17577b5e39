#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "sca2d/fft.hpp"

using namespace sca2d;

namespace {

double rel_err(const std::vector<cplx>& a, const std::vector<std::complex<double>>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

}  // namespace

TEST_CASE("dft frozen examples") {
  const auto dc = dft_real({1, 1, 1, 1});
  CHECK(std::abs(dc[0] - cplx{4, 0}) < 1e-12);
  CHECK(std::abs(dc[1]) < 1e-12);
  CHECK(std::abs(dc[2]) < 1e-12);
  CHECK(std::abs(dc[3]) < 1e-12);

  const auto nyq = dft_real({1, -1, 1, -1});
  CHECK(std::abs(nyq[0]) < 1e-12);
  CHECK(std::abs(nyq[1]) < 1e-12);
  CHECK(std::abs(nyq[2] - cplx{4, 0}) < 1e-12);
  CHECK(std::abs(nyq[3]) < 1e-12);
}

TEST_CASE("dft matches naive oracle on a random length-16 vector") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(16);
  for (double& v : x) v = u(rng);
  CHECK(rel_err(dft_real(x), oracle::dft(x)) < 1e-12);
}

TEST_CASE("dft matches the oracle on power-of-two and odd lengths") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (std::size_t n : {2u, 3u, 7u, 8u, 12u, 32u, 33u, 64u}) {
    std::vector<double> x(n);
    for (double& v : x) v = u(rng);
    CHECK(rel_err(dft_real(x), oracle::dft(x)) < 1e-9);
  }
}

TEST_CASE("dft rejects empty input") {
  CHECK_THROWS_AS((void)dft(std::vector<cplx>{}), std::invalid_argument);
}

TEST_CASE("hann window closed form at L=4") {
  const auto w = hann_window(4);
  REQUIRE(w.size() == 4);
  CHECK(w[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(w[2] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(w[3] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("hann window is symmetric with zero endpoints") {
  const auto w = hann_window(8);
  CHECK(w.front() == 0.0);
  CHECK(w.back() == doctest::Approx(0.0).epsilon(1e-12));
  for (std::size_t i = 0; i < w.size(); ++i)
    CHECK(w[i] == doctest::Approx(w[w.size() - 1 - i]).epsilon(1e-12));
  CHECK_THROWS_AS((void)hann_window(1), std::invalid_argument);
}

TEST_CASE("dft is linear") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(20), b(20), s(20);
  for (std::size_t i = 0; i < 20; ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
    s[i] = 2.0 * a[i] - 3.0 * b[i];
  }
  const auto fa = dft_real(a), fb = dft_real(b), fs = dft_real(s);
  for (std::size_t i = 0; i < 20; ++i)
    CHECK(std::abs(fs[i] - (2.0 * fa[i] - 3.0 * fb[i])) < 1e-9);
}

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "sca2d/leakage.hpp"

using namespace sca2d;
using namespace sca2d::leakage;

TEST_CASE("pearson frozen examples") {
  CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_WITH_AS((void)pearson({1, 2, 3}, {5, 5, 5}), "zero variance",
                       std::domain_error);
  CHECK_THROWS_AS((void)pearson({1, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("pearson matches the two-pass oracle and is scale invariant") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(200), b(200), scaled(200);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = g(rng);
    b[i] = 0.3 * a[i] + g(rng);
    scaled[i] = 2.5 * b[i] + 7.0;
  }
  const double rho = pearson(a, b);
  CHECK(rho == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-12));
  CHECK(pearson(a, scaled) == doctest::Approx(rho).epsilon(1e-12));
  std::vector<double> flipped(200);
  for (std::size_t i = 0; i < b.size(); ++i) flipped[i] = -b[i];
  CHECK(pearson(a, flipped) == doctest::Approx(-rho).epsilon(1e-12));
}

TEST_CASE("leakage values map labels through the chosen model") {
  const std::vector<std::uint8_t> labels = {0x00, 0xFF, 0xA5};
  CHECK(leakage_values(labels, LeakageModel::HammingWeight) ==
        std::vector<double>{0, 8, 4});
  CHECK(leakage_values(labels, LeakageModel::Identity) ==
        std::vector<double>{0, 255, 165});
}

namespace {

TraceSet planted_set(std::size_t n, std::size_t len, int leak_at, std::uint64_t seed,
                     std::vector<double>& leak_out) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> hw(0, 8);
  TraceSet ts;
  ts.n_samples = len;
  leak_out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Trace t;
    t.samples.resize(len);
    for (double& v : t.samples) v = g(rng);
    leak_out[i] = hw(rng);
    t.samples[leak_at] += leak_out[i];
    ts.traces.push_back(t);
  }
  return ts;
}

}  // namespace

TEST_CASE("1d correlation map finds a planted leak") {
  std::vector<double> leak;
  const TraceSet ts = planted_set(600, 24, 17, 4242, leak);
  const CorrelationMap map = correlation_map_1d(ts, leak);
  REQUIRE(map.width == 24);
  REQUIRE(map.height == 1);
  const Peak p = peak_abs(map);
  CHECK(p.col == 17);
  CHECK(p.rho > 0.5);
  for (double r : map.rho) {
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("independent noise stays below the null bound") {
  std::vector<double> planted;
  TraceSet ts = planted_set(1000, 24, 0, 99, planted);
  // fresh leak values, unrelated to anything in the traces
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> hw(0, 8);
  std::vector<double> leak(1000);
  for (double& v : leak) v = hw(rng);
  for (auto& t : ts.traces) t.samples[0] = std::normal_distribution<double>()(rng);
  const CorrelationMap map = correlation_map_1d(ts, leak);
  CHECK(std::abs(peak_abs(map).rho) < 0.15);
}

TEST_CASE("correlation map scale and offset invariance") {
  std::vector<double> leak;
  const TraceSet ts = planted_set(300, 12, 5, 7, leak);
  const CorrelationMap base = correlation_map_1d(ts, leak);
  std::vector<double> affine(leak.size()), negated(leak.size());
  for (std::size_t i = 0; i < leak.size(); ++i) {
    affine[i] = 3.0 * leak[i] + 11.0;
    negated[i] = -2.0 * leak[i];
  }
  const CorrelationMap scaled = correlation_map_1d(ts, affine);
  const CorrelationMap flipped = correlation_map_1d(ts, negated);
  for (std::size_t i = 0; i < base.rho.size(); ++i) {
    CHECK(scaled.rho[i] == doctest::Approx(base.rho[i]).epsilon(1e-12));
    CHECK(flipped.rho[i] == doctest::Approx(-base.rho[i]).epsilon(1e-12));
  }
}

TEST_CASE("2d correlation map self-correlation and degenerate pixels") {
  ImageSet images;
  std::vector<double> leak(50);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    ImageTensor img(2, 2, 1);
    leak[i] = g(rng);
    img.at(0, 0, 0) = leak[i];  // pixel (0,0) equals the leak variable
    img.at(0, 1, 0) = g(rng);
    img.at(1, 0, 0) = 4.0;  // constant pixel
    img.at(1, 1, 0) = g(rng);
    images.push_back(img, std::nullopt);
  }
  const CorrelationMap map = correlation_map_2d(images, leak);
  REQUIRE(map.height == 2);
  REQUIRE(map.width == 2);
  CHECK(map.rho[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(map.rho[2] == 0.0);
  CHECK(map.degenerate[2] == 1);
  CHECK(map.degenerate[0] == 0);

  const Peak p = peak_abs(map);
  CHECK(p.row == 0);
  CHECK(p.col == 0);

  std::vector<double> constant(50, 1.0);
  CHECK_THROWS_WITH_AS((void)correlation_map_2d(images, constant), "zero variance",
                       std::domain_error);
}

TEST_CASE("correlation map validates input sizes") {
  ImageSet images;
  images.push_back(ImageTensor(2, 2, 1), std::nullopt);
  std::vector<double> leak = {1.0};
  CHECK_THROWS_AS((void)correlation_map_2d(images, leak), std::invalid_argument);
  images.push_back(ImageTensor(2, 2, 1), std::nullopt);
  std::vector<double> wrong = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS((void)correlation_map_2d(images, wrong), std::invalid_argument);
}

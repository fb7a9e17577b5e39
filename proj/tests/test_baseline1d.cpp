#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "sca2d/baseline1d.hpp"

using namespace sca2d;
using namespace sca2d::baseline1d;

TEST_CASE("fft features frozen example and oracle match") {
  CHECK(fft_features(std::vector<double>{1, 1, 1, 1}) == std::vector<double>{4, 0, 0});
  CHECK(fft_features(std::vector<double>{0, 0, 0, 0, 0}) ==
        std::vector<double>{0, 0, 0});

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(23);
  for (double& v : x) v = u(rng);
  const auto feats = fft_features(x);
  const auto full = oracle::dft(x);
  REQUIRE(feats.size() == 12);  // floor(23/2)+1
  for (std::size_t i = 0; i < feats.size(); ++i)
    CHECK(feats[i] == doctest::Approx(std::abs(full[i])).epsilon(1e-9));
}

TEST_CASE("fft features on a matrix transform each row") {
  FeatureMatrix m(2, 4);
  m.row(0)[0] = 1;
  m.row(0)[1] = 1;
  m.row(0)[2] = 1;
  m.row(0)[3] = 1;
  m.row(1)[0] = 1;
  m.row(1)[1] = -1;
  m.row(1)[2] = 1;
  m.row(1)[3] = -1;
  const FeatureMatrix f = fft_features(m);
  REQUIRE(f.cols == 3);
  CHECK(f.row(0)[0] == doctest::Approx(4.0));
  CHECK(f.row(0)[1] == doctest::Approx(0.0));
  CHECK(f.row(1)[2] == doctest::Approx(4.0));
}

TEST_CASE("pca on the two-point diagonal example") {
  FeatureMatrix x(2, 2);
  x.row(0)[0] = 1;
  x.row(0)[1] = 1;
  x.row(1)[0] = -1;
  x.row(1)[1] = -1;
  const PcaModel model = pca_fit(x, 2);
  CHECK(model.mean[0] == doctest::Approx(0.0));
  CHECK(model.mean[1] == doctest::Approx(0.0));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(model.components[0]) == doctest::Approx(inv_sqrt2).epsilon(1e-9));
  CHECK(std::abs(model.components[1]) == doctest::Approx(inv_sqrt2).epsilon(1e-9));
  CHECK(model.components[0] == doctest::Approx(model.components[1]).epsilon(1e-9));
  CHECK(model.eigenvalues[0] == doctest::Approx(4.0).epsilon(1e-9));  // 1/(n-1) norm
  CHECK(model.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("pca components are orthonormal with non-increasing variance") {
  std::mt19937_64 rng(88);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix x(40, 8);
  for (double& v : x.data) v = g(rng);
  const PcaModel model = pca_fit(x, 8);
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      double dot = 0.0;
      for (std::size_t d = 0; d < 8; ++d)
        dot += model.components[a * 8 + d] * model.components[b * 8 + d];
      CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-8));
    }
    if (a > 0) CHECK(model.eigenvalues[a] <= model.eigenvalues[a - 1] + 1e-12);
    CHECK(model.eigenvalues[a] >= 0.0);
  }
}

TEST_CASE("pca transform centering, projection and linearity") {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> g(0.0, 2.0);
  FeatureMatrix x(30, 6);
  for (double& v : x.data) v = g(rng);
  const PcaModel model = pca_fit(x, 4);

  FeatureMatrix probe(3, 6);
  for (std::size_t d = 0; d < 6; ++d) {
    probe.row(0)[d] = model.mean[d];
    probe.row(1)[d] = model.mean[d] + model.components[d];  // mean + first component
    probe.row(2)[d] = g(rng);
  }
  const FeatureMatrix proj = pca_transform(model, probe);
  REQUIRE(proj.cols == 4);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(proj.row(0)[k]) < 1e-9);
  CHECK(proj.row(1)[0] == doctest::Approx(1.0).epsilon(1e-9));
  for (int k = 1; k < 4; ++k) CHECK(std::abs(proj.row(1)[k]) < 1e-9);

  // naive dot-product oracle on the random row
  for (int k = 0; k < 4; ++k) {
    double dot = 0.0;
    for (std::size_t d = 0; d < 6; ++d)
      dot += (probe.row(2)[d] - model.mean[d]) * model.components[k * 6 + d];
    CHECK(proj.row(2)[k] == doctest::Approx(dot).epsilon(1e-9));
  }
}

TEST_CASE("full-rank pca reconstruction recovers the data") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix x(25, 10);
  for (double& v : x.data) v = g(rng);
  const PcaModel model = pca_fit(x, 10);
  const FeatureMatrix proj = pca_transform(model, x);
  const FeatureMatrix back = pca_reconstruct(model, proj);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    CHECK(std::abs(back.data[i] - x.data[i]) < 1e-6);
}

TEST_CASE("pca parameter validation") {
  FeatureMatrix x(3, 4);
  CHECK_THROWS_AS((void)pca_fit(x, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)pca_fit(x, 5), std::invalid_argument);
  FeatureMatrix one(1, 4);
  CHECK_THROWS_AS((void)pca_fit(one, 1), std::invalid_argument);
}

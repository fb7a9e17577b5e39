#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "sca2d/augment.hpp"

using namespace sca2d;
using namespace sca2d::augment;

namespace {

ImageTensor random_image(std::mt19937_64& rng, int h, int w, int c = 1) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageTensor img(h, w, c);
  for (double& v : img.data) v = u(rng);
  return img;
}

bool all_finite(const ImageTensor& img) {
  for (double v : img.data)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

TEST_CASE("null affine warp is the identity") {
  std::mt19937_64 rng(1);
  const ImageTensor img = random_image(rng, 7, 7);
  const ImageTensor out = affine_warp(img, 0.0, 0.0);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    CHECK(out.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));

  const ImageTensor drawn = rotate_shear(img, rng, 0.0, 0.0);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    CHECK(drawn.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
}

TEST_CASE("180 degree rotation flips the image") {
  ImageTensor img(2, 2, 1);
  img.at(0, 0, 0) = 1;
  img.at(0, 1, 0) = 2;
  img.at(1, 0, 0) = 3;
  img.at(1, 1, 0) = 4;
  const ImageTensor out = affine_warp(img, std::numbers::pi, 0.0);
  CHECK(out.at(0, 0, 0) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(out.at(0, 1, 0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(out.at(1, 0, 0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(out.at(1, 1, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("rotate_shear keeps shape and produces finite values") {
  std::mt19937_64 rng(2);
  const ImageTensor img = random_image(rng, 12, 12, 2);
  for (int rep = 0; rep < 10; ++rep) {
    const ImageTensor out = rotate_shear(img, rng);
    CHECK(out.height == 12);
    CHECK(out.width == 12);
    CHECK(out.channels == 2);
    CHECK(all_finite(out));
  }
}

TEST_CASE("2d shift zero fill") {
  std::mt19937_64 rng(3);
  const ImageTensor img = random_image(rng, 8, 8);
  const ImageTensor same = shift2d(img, rng, 0.0);
  CHECK(same.data == img.data);

  // nonzero count can only drop: shifted-in pixels are zero
  std::mt19937_64 rng2(4);
  ImageTensor nonneg = random_image(rng2, 10, 10);
  for (double& v : nonneg.data) v += 0.01;  // strictly positive
  for (int rep = 0; rep < 20; ++rep) {
    const ImageTensor out = shift2d(nonneg, rng2, 0.2);
    int nonzero = 0;
    for (double v : out.data)
      if (v != 0.0) ++nonzero;
    CHECK(nonzero <= 100);
    CHECK(all_finite(out));
  }
}

TEST_CASE("random erase stays within the area bounds and is local") {
  std::mt19937_64 rng(5);
  const ImageTensor img = random_image(rng, 20, 20);
  const std::size_t total = img.data.size();
  for (int rep = 0; rep < 50; ++rep) {
    const ImageTensor out = random_erase(img, rng, 0.02, 0.2);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < total; ++i) {
      if (out.data[i] != img.data[i]) {
        ++changed;
        CHECK(out.data[i] >= 0.0);
        CHECK(out.data[i] <= 1.0);
      }
    }
    // the rectangle is resampled uniformly, so every erased pixel changes
    // value almost surely; the count is the rectangle area
    CHECK(changed >= static_cast<std::size_t>(std::ceil(0.02 * total)));
    CHECK(changed <= static_cast<std::size_t>(std::floor(0.2 * total)));
  }
  CHECK_THROWS_AS((void)random_erase(img, rng, 0.5, 0.2), std::invalid_argument);
  CHECK_THROWS_AS((void)random_erase(img, rng, 0.0, 0.2), std::invalid_argument);
}

TEST_CASE("random erase seeded reproducibility") {
  std::mt19937_64 rng_img(6);
  const ImageTensor img = random_image(rng_img, 16, 16);
  std::mt19937_64 a(123), b(123);
  const ImageTensor out_a = random_erase(img, a);
  const ImageTensor out_b = random_erase(img, b);
  CHECK(out_a.data == out_b.data);
}

TEST_CASE("gaussian blur fixed point, kernel and rejection") {
  ImageTensor flat(6, 6, 1);
  for (double& v : flat.data) v = 2.5;
  const ImageTensor out = gaussian_blur(flat, 1.0);
  for (double v : out.data) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));

  // impulse response reproduces the normalized separable kernel
  const double sigma = 0.8;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const int side = 2 * radius + 1;
  ImageTensor impulse(side, side, 1);
  impulse.at(radius, radius, 0) = 1.0;
  const ImageTensor bump = gaussian_blur(impulse, sigma);
  std::vector<double> kernel(side);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i / sigma) * (i / sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;
  // centre row unaffected by edge replication of the zero border
  for (int j = 0; j < side; ++j)
    CHECK(bump.at(radius, j, 0) == doctest::Approx(kernel[radius] * kernel[j]).epsilon(1e-9));

  CHECK_THROWS_AS((void)gaussian_blur(flat, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)gaussian_blur(flat, -1.0), std::invalid_argument);
}

TEST_CASE("salt and pepper extremes and rate concentration") {
  std::mt19937_64 rng(7);
  const ImageTensor img = random_image(rng, 30, 30);
  const ImageTensor same = salt_pepper(img, rng, 0.0);
  CHECK(same.data == img.data);

  const ImageTensor all = salt_pepper(img, rng, 1.0);
  for (double v : all.data) CHECK((v == 0.0 || v == 1.0));

  const double rate = 0.1;
  const double n = static_cast<double>(img.data.size());
  const ImageTensor noisy = salt_pepper(img, rng, rate);
  double changed = 0;
  for (std::size_t i = 0; i < img.data.size(); ++i)
    if (noisy.data[i] != img.data[i]) ++changed;
  const double bound = 5.0 * std::sqrt(n * rate * (1.0 - rate));
  CHECK(std::abs(changed - n * rate) <= bound);

  CHECK_THROWS_AS((void)salt_pepper(img, rng, 1.5), std::invalid_argument);
}

TEST_CASE("1d shift fill patterns") {
  CHECK(shift1d({1, 2, 3, 4}, 2) == std::vector<double>{0, 0, 1, 2});
  CHECK(shift1d({1, 2, 3, 4}, 0) == std::vector<double>{1, 2, 3, 4});
  CHECK(shift1d({1, 2, 3, 4}, -1) == std::vector<double>{2, 3, 4, 0});
  CHECK(shift1d({1, 2}, 5) == std::vector<double>{0, 0});
}

TEST_CASE("1d noise identity and mean concentration") {
  std::mt19937_64 rng(8);
  const std::vector<double> x = {1, 2, 3};
  CHECK(noise1d(x, rng, 0.0) == x);

  const double sigma = 0.5;
  std::vector<double> big(100000, 1.0);
  const std::vector<double> noisy = noise1d(big, rng, sigma);
  double mean = 0.0;
  for (std::size_t i = 0; i < big.size(); ++i) mean += noisy[i] - big[i];
  mean /= static_cast<double>(big.size());
  CHECK(std::abs(mean) < 5.0 * sigma / std::sqrt(100000.0));
}

TEST_CASE("augment kinds round-trip and apply dispatches") {
  for (Kind k : {Kind::RotateShear, Kind::Shift2d, Kind::RandomErase, Kind::GaussianBlur,
                 Kind::SaltPepper})
    CHECK(kind_from_string(kind_name(k)) == k);
  CHECK_THROWS_AS((void)kind_from_string("mixup"), std::invalid_argument);

  std::mt19937_64 rng(9);
  const ImageTensor img = random_image(rng, 10, 10);
  for (Kind k : {Kind::RotateShear, Kind::Shift2d, Kind::RandomErase, Kind::GaussianBlur,
                 Kind::SaltPepper}) {
    AugmentSpec spec;
    spec.kind = k;
    const ImageTensor out = apply(spec, img, rng);
    CHECK(out.height == img.height);
    CHECK(out.width == img.width);
    CHECK(out.channels == img.channels);
    CHECK(all_finite(out));
  }
}

TEST_CASE("seeded augmenter replays bit-exactly") {
  std::mt19937_64 rng(10);
  const ImageTensor img = random_image(rng, 14, 14);
  AugmentSpec spec;
  spec.kind = Kind::RandomErase;
  const Augmenter aug = make_augmenter(spec);
  const ImageTensor a = aug(img, 42);
  const ImageTensor b = aug(img, 42);
  const ImageTensor c = aug(img, 43);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
}

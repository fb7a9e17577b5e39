#include "sca2d/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sca2d::augment {

ImageTensor affine_warp(const ImageTensor& img, double angle_rad, double shear) {
  const int h = img.height, w = img.width, nc = img.channels;
  const double cy = (h - 1) / 2.0;
  const double cx = (w - 1) / 2.0;

  // Forward map M = Shear * Rot in (x, y) coordinates; resample the output
  // through the inverse. Both factors have det 1, so M is always invertible.
  const double c = std::cos(angle_rad), s = std::sin(angle_rad);
  // M = [[1, shear], [0, 1]] * [[c, -s], [s, c]]
  const double m00 = c + shear * s, m01 = -s + shear * c;
  const double m10 = s, m11 = c;
  // inverse of a det-1 2x2 matrix
  const double i00 = m11, i01 = -m01;
  const double i10 = -m10, i11 = m00;

  ImageTensor out(h, w, nc);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double sx = i00 * dx + i01 * dy + cx;
      const double sy = i10 * dx + i11 * dy + cy;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0, fy = sy - y0;
      for (int ch = 0; ch < nc; ++ch) {
        auto sample = [&](int yy, int xx) -> double {
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0;  // zero fill
          return img.at(yy, xx, ch);
        };
        out.at(y, x, ch) = (1 - fy) * ((1 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1)) +
                           fy * ((1 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1));
      }
    }
  }
  return out;
}

ImageTensor rotate_shear(const ImageTensor& img, std::mt19937_64& rng, double max_angle_deg,
                         double max_shear) {
  std::uniform_real_distribution<double> angle(-max_angle_deg, max_angle_deg);
  std::uniform_real_distribution<double> shear(-max_shear, max_shear);
  const double a = angle(rng) * std::numbers::pi / 180.0;
  const double s = shear(rng);
  return affine_warp(img, a, s);
}

ImageTensor shift2d(const ImageTensor& img, std::mt19937_64& rng, double max_frac) {
  const int max_dy = static_cast<int>(std::floor(max_frac * img.height));
  const int max_dx = static_cast<int>(std::floor(max_frac * img.width));
  std::uniform_int_distribution<int> ddy(-max_dy, max_dy);
  std::uniform_int_distribution<int> ddx(-max_dx, max_dx);
  const int dy = ddy(rng);
  const int dx = ddx(rng);

  ImageTensor out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= img.height) continue;
    for (int x = 0; x < img.width; ++x) {
      const int sx = x - dx;
      if (sx < 0 || sx >= img.width) continue;
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

ImageTensor random_erase(const ImageTensor& img, std::mt19937_64& rng, double min_frac,
                         double max_frac) {
  if (!(0.0 < min_frac && min_frac <= max_frac && max_frac < 1.0))
    throw std::invalid_argument("erase fractions must satisfy 0 < min <= max < 1");
  const long total = static_cast<long>(img.height) * img.width;
  const long area_min = std::max<long>(1, static_cast<long>(std::ceil(min_frac * total)));
  const long area_max = std::max(area_min, static_cast<long>(std::floor(max_frac * total)));

  // Pick a height, then a width whose product stays inside [area_min,
  // area_max]; retry heights that admit no such width.
  std::uniform_int_distribution<int> pick_h(1, img.height);
  int eh = 0, ew = 0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const int h = pick_h(rng);
    const long w_lo = std::max<long>(1, (area_min + h - 1) / h);
    const long w_hi = std::min<long>(img.width, area_max / h);
    if (w_lo > w_hi) continue;
    std::uniform_int_distribution<long> pick_w(w_lo, w_hi);
    eh = h;
    ew = static_cast<int>(pick_w(rng));
    break;
  }
  if (eh == 0) {
    // Degenerate geometry; fall back to the smallest admissible square.
    eh = std::min<long>(img.height, static_cast<long>(std::ceil(std::sqrt(area_min))));
    ew = std::min<long>(img.width, (area_min + eh - 1) / eh);
  }

  std::uniform_int_distribution<int> pick_y(0, img.height - eh);
  std::uniform_int_distribution<int> pick_x(0, img.width - ew);
  const int y0 = pick_y(rng);
  const int x0 = pick_x(rng);

  std::uniform_real_distribution<double> noise(0.0, 1.0);
  ImageTensor out = img;
  for (int y = y0; y < y0 + eh; ++y)
    for (int x = x0; x < x0 + ew; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = noise(rng);
  return out;
}

ImageTensor gaussian_blur(const ImageTensor& img, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i / sigma) * (i / sigma));
    norm += kernel[i + radius];
  }
  for (double& k : kernel) k /= norm;

  const int h = img.height, w = img.width, nc = img.channels;
  auto clamp_y = [&](int y) { return std::clamp(y, 0, h - 1); };
  auto clamp_x = [&](int x) { return std::clamp(x, 0, w - 1); };

  ImageTensor tmp(h, w, nc), out(h, w, nc);
  for (int y = 0; y < h; ++y)  // horizontal pass, replicated edges
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < nc; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * img.at(y, clamp_x(x + i), c);
        tmp.at(y, x, c) = acc;
      }
  for (int y = 0; y < h; ++y)  // vertical pass
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < nc; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.at(clamp_y(y + i), x, c);
        out.at(y, x, c) = acc;
      }
  return out;
}

ImageTensor salt_pepper(const ImageTensor& img, std::mt19937_64& rng, double rate) {
  if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("rate must be in [0,1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ImageTensor out = img;
  for (double& v : out.data) {
    const double u = unit(rng);
    if (u < rate) v = u < rate / 2.0 ? 0.0 : 1.0;
  }
  return out;
}

std::vector<double> shift1d(const std::vector<double>& samples, int offset) {
  const int n = static_cast<int>(samples.size());
  std::vector<double> out(samples.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const int src = i - offset;
    if (src >= 0 && src < n) out[i] = samples[src];
  }
  return out;
}

std::vector<double> noise1d(const std::vector<double>& samples, std::mt19937_64& rng,
                            double sigma) {
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> out = samples;
  for (double& v : out) v += noise(rng);
  return out;
}

Kind kind_from_string(const std::string& name) {
  if (name == "rotate_shear") return Kind::RotateShear;
  if (name == "shift") return Kind::Shift2d;
  if (name == "erase") return Kind::RandomErase;
  if (name == "blur") return Kind::GaussianBlur;
  if (name == "salt_pepper") return Kind::SaltPepper;
  throw std::invalid_argument("unknown augmentation '" + name + "'");
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::RotateShear: return "rotate_shear";
    case Kind::Shift2d: return "shift";
    case Kind::RandomErase: return "erase";
    case Kind::GaussianBlur: return "blur";
    case Kind::SaltPepper: return "salt_pepper";
  }
  return "?";
}

ImageTensor apply(const AugmentSpec& spec, const ImageTensor& img, std::mt19937_64& rng) {
  switch (spec.kind) {
    case Kind::RotateShear: return rotate_shear(img, rng, spec.max_angle_deg, spec.max_shear);
    case Kind::Shift2d: return shift2d(img, rng, spec.max_shift_frac);
    case Kind::RandomErase: return random_erase(img, rng, spec.erase_min_frac, spec.erase_max_frac);
    case Kind::GaussianBlur: return gaussian_blur(img, spec.blur_sigma);
    case Kind::SaltPepper: return salt_pepper(img, rng, spec.salt_pepper_rate);
  }
  throw std::invalid_argument("unknown augmentation kind");
}

Augmenter make_augmenter(const AugmentSpec& spec) {
  return [spec](const ImageTensor& img, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return apply(spec, img, rng);
  };
}

}  // namespace sca2d::augment

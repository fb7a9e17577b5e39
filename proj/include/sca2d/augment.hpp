#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "sca2d/core.hpp"

// Label-preserving data augmentation for images and raw traces. Every random
// op takes the generator by reference so callers control seeding; none of
// them changes the shape of its input.

namespace sca2d::augment {

/// Rotation-plus-shear about the image center with bilinear resampling and
/// zero fill. The shear matrix is [[1, s], [0, 1]] applied after the
/// rotation; both transforms have unit determinant.
ImageTensor affine_warp(const ImageTensor& img, double angle_rad, double shear);

/// affine_warp with angle ~ U[-max_angle_deg, +max_angle_deg] (degrees) and
/// shear ~ U[-max_shear, +max_shear].
ImageTensor rotate_shear(const ImageTensor& img, std::mt19937_64& rng,
                         double max_angle_deg = 40.0, double max_shear = 0.5);

/// Integer translation up to +-floor(max_frac * dim) per axis, zero fill.
ImageTensor shift2d(const ImageTensor& img, std::mt19937_64& rng, double max_frac = 0.2);

/// Overwrites one rectangle with U[0,1] noise. The rectangle's pixel count
/// is guaranteed to lie within [min_frac, max_frac] of the image area.
ImageTensor random_erase(const ImageTensor& img, std::mt19937_64& rng, double min_frac = 0.02,
                         double max_frac = 0.2);

/// Separable Gaussian blur, kernel radius ceil(3*sigma), replicated edges.
/// sigma must be positive.
ImageTensor gaussian_blur(const ImageTensor& img, double sigma);

/// Sets each entry, with probability `rate`, to 0 or 1 (equal odds).
ImageTensor salt_pepper(const ImageTensor& img, std::mt19937_64& rng, double rate = 0.02);

/// Shifts samples right (positive offset) or left, zero-filling the gap.
std::vector<double> shift1d(const std::vector<double>& samples, int offset);

/// Adds i.i.d. N(0, sigma^2) noise to every sample.
std::vector<double> noise1d(const std::vector<double>& samples, std::mt19937_64& rng,
                            double sigma);

enum class Kind { RotateShear, Shift2d, RandomErase, GaussianBlur, SaltPepper };

Kind kind_from_string(const std::string& name);
std::string kind_name(Kind k);

struct AugmentSpec {
  Kind kind = Kind::RandomErase;
  double max_angle_deg = 40.0;
  double max_shear = 0.5;
  double max_shift_frac = 0.2;
  double erase_min_frac = 0.02;
  double erase_max_frac = 0.2;
  double blur_sigma = 1.0;
  double salt_pepper_rate = 0.02;
};

ImageTensor apply(const AugmentSpec& spec, const ImageTensor& img, std::mt19937_64& rng);

/// Seeded single-image augmenter, e.g. for the training-loop hook: each call
/// runs `apply` with a generator seeded from `seed` alone.
using Augmenter = std::function<ImageTensor(const ImageTensor&, std::uint64_t)>;
Augmenter make_augmenter(const AugmentSpec& spec);

}  // namespace sca2d::augment

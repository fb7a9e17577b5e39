#pragma once

#include <vector>

#include "sca2d/core.hpp"

// Classical 1D feature pipelines used as reference points for the image
// encodings: one-sided FFT magnitudes and PCA projections.

namespace sca2d::baseline1d {

/// One-sided magnitude spectrum, floor(N/2)+1 bins.
std::vector<double> fft_features(const std::vector<double>& trace);
FeatureMatrix fft_features(const FeatureMatrix& traces);

struct PcaModel {
  std::size_t dim = 0;
  int k = 0;
  std::vector<double> mean;         // dim
  std::vector<double> components;   // k x dim, row-major, descending eigenvalue
  std::vector<double> eigenvalues;  // k, nonnegative
};

/// Principal components of the sample covariance (1/(n-1) normalization),
/// diagonalized with cyclic Jacobi rotations until the off-diagonal
/// Frobenius norm drops below 1e-10. Components are sorted by descending
/// eigenvalue; each one's sign is fixed so its largest-|.| entry is positive.
PcaModel pca_fit(const FeatureMatrix& x, int k);

/// Projects rows onto the retained components: (x - mean) * components^T.
FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& x);

/// Maps projections back: proj * components + mean.
FeatureMatrix pca_reconstruct(const PcaModel& model, const FeatureMatrix& proj);

}  // namespace sca2d::baseline1d

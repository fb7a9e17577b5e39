#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sca2d/core.hpp"

// Time-series to image transforms: Gramian angular fields, Markov transition
// fields, recurrence plots and short-time Fourier spectrograms, plus the
// helpers needed to stack them into multi-channel images.

namespace sca2d::imaging {

/// Polar view of a trace already rescaled to [-1, 1]: phi_i = arccos(x_i),
/// radius_i = (i + 1) / N. Values outside [-1, 1] by more than 1e-12 throw
/// std::domain_error; tiny excursions are clamped.
struct PolarTrace {
  std::vector<double> phi;
  std::vector<double> radius;
};
PolarTrace to_polar(const std::vector<double>& rescaled);

/// Gramian angular summation field: G[i][j] = cos(phi_i + phi_j) after
/// min-max rescaling. The diagonal equals 2*x~_i^2 - 1.
ImageTensor gasf(const std::vector<double>& trace);

/// Gramian angular difference field: D[i][j] = sin(phi_i - phi_j) after
/// min-max rescaling. Antisymmetric with a zero diagonal.
ImageTensor gadf(const std::vector<double>& trace);

// The same fields evaluated directly on values already in [-1, 1] (the
// rescale step skipped), useful when the angular math is tested or driven
// on its own.
ImageTensor gasf_rescaled(const std::vector<double>& rescaled);
ImageTensor gadf_rescaled(const std::vector<double>& rescaled);

struct MtfParams {
  int quantiles = 8;
  int blur_block = 1;  // block-average factor; 1 keeps the full N x N field
};

/// Markov transition field. Samples are binned by empirical quantiles
/// (linear-interpolation quantiles; values tied with a boundary go to the
/// lower bin), a first-order transition matrix W is estimated with rows
/// normalized to one (rows without outgoing transitions stay all-zero), and
/// M[i][j] = W[bin(x_i)][bin(x_j)]. Requires at least `quantiles` distinct
/// sample values, otherwise throws "unresolvable quantiles".
ImageTensor mtf(const std::vector<double>& trace, const MtfParams& params = {});

/// Quantile boundaries used by mtf, exposed for inspection: Q-1 values.
std::vector<double> mtf_bin_boundaries(const std::vector<double>& trace, int quantiles);

struct RpParams {
  int dimension = 1;   // trajectory dimension M
  int time_delay = 1;  // tau
  double epsilon = 0.0;
  bool binarize = false;  // when set, R[i][j] = 1 if distance <= epsilon else 0
};

/// Recurrence plot on trajectories x_i = (x_i, x_{i+tau}, ..., x_{i+(M-1)tau});
/// entries are pairwise Euclidean distances (or their epsilon-thresholding).
/// Output is N_T x N_T with N_T = N - (M-1)*tau.
ImageTensor recurrence_plot(const std::vector<double>& trace, const RpParams& params = {});

struct StftParams {
  int window_length = 8;  // samples per frame
  int hop = -1;           // < 0 resolves to max(1, round(0.1 * window_length))
  double sample_frequency = 0.625e9;  // informational only
  int resolved_hop() const;
};

/// Hann-windowed magnitude spectrogram. The signal is zero-padded by
/// floor(L/2) on both ends so the frame count is ceil(N / hop); each row is
/// one frame, each column one of the floor(L/2)+1 one-sided frequency bins.
ImageTensor stft_spectrogram(const std::vector<double>& trace, const StftParams& params = {});

/// Rows and columns swapped (channels kept); turns the frames x bins
/// spectrogram into the plotted orientation with frequency bands as rows.
ImageTensor transpose(const ImageTensor& img);

/// Stretches a spectrogram in plotted orientation (rows = frequency bands,
/// columns = time) to target_height rows by repeating each band as a block
/// of rows; when target_height is not a multiple of the band count the
/// first (target_height mod bands) bands get one extra row.
/// target_height equal to the band count is the identity.
ImageTensor upscale_spectrogram(const ImageTensor& spec, int target_height);

/// Affine rescale of all entries onto [0, 1]. Constant images throw
/// std::domain_error("degenerate image").
ImageTensor rescale_01(const ImageTensor& img);

/// Concatenates equally sized single- or multi-channel images along the
/// channel axis, in argument order.
ImageTensor stack_channels(const std::vector<ImageTensor>& imgs);
ImageTensor extract_channel(const ImageTensor& img, int channel);

/// Piecewise aggregate approximation: segment means, with the remainder of
/// an uneven split folded into the last segment.
std::vector<double> paa(const std::vector<double>& trace, int segments);

enum class Method { Gasf, Gadf, Mtf, Rp, Stft };
Method method_from_string(const std::string& name);
std::string method_name(Method m);

/// Full per-trace encoding recipe used by the batch front-end: one method or
/// an ordered stack of methods sharing one set of transform parameters.
struct EncodeSpec {
  std::vector<Method> methods{Method::Gasf};
  MtfParams mtf;
  RpParams rp;
  StftParams stft;
  // Standalone spectrograms keep their native frames x bins shape unless
  // this asks for the frames x frames square; inside a stack the upscale
  // always happens so channel shapes agree.
  bool stft_square = false;

  bool stacked() const { return methods.size() > 1; }
};

ImageTensor encode_trace(const std::vector<double>& samples, const EncodeSpec& spec);

/// Encodes every trace of a set (labels are carried over when present).
/// Fans out across worker threads; the result does not depend on the count.
ImageSet encode_set(const TraceSet& ts, const EncodeSpec& spec);

}  // namespace sca2d::imaging

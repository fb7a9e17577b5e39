#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

// Core domain types shared by the whole toolkit: traces, trace sets,
// intermediate-value targets, image tensors and classifier posteriors.

namespace sca2d {

constexpr int kNumClasses = 256;

using Block16 = std::array<std::uint8_t, 16>;

enum class SetRole { Profiling, Attack };

/// One measured (or synthesized) power trace plus its public data.
/// For first-round targets `public_data` holds the plaintext; for
/// last-round targets it holds the ciphertext bytes instead.
struct Trace {
  std::vector<double> samples;
  Block16 public_data{};
  Block16 key{};
  std::optional<std::uint8_t> label;
};

struct TraceSet {
  std::vector<Trace> traces;
  std::size_t n_samples = 0;
  SetRole role = SetRole::Profiling;
  double sample_frequency = 0.625e9;  // Hz
  bool has_key = true;

  std::size_t size() const { return traces.size(); }
  /// Throws std::invalid_argument if any trace disagrees with n_samples.
  void validate() const;
};

enum class TargetKind : std::uint8_t {
  SboxOutput = 0,         // Sbox(p ^ k)
  ConsecutiveSboxXor = 1, // Sbox(p_i ^ k_i) ^ Sbox(p_j ^ k_j)
  LastRoundTarget = 2,    // InvSbox(c_i ^ k) ^ c_j
};

/// Which intermediate value the classifier is trained to recover.
/// `second_index` is only used by the two-byte targets; a negative
/// value means "byte_index + 1".
struct IntermediateValueSpec {
  TargetKind kind = TargetKind::SboxOutput;
  int byte_index = 0;
  int second_index = -1;

  int resolved_second() const { return second_index < 0 ? byte_index + 1 : second_index; }
};

int hamming_weight(std::uint8_t v);
std::uint8_t aes_sbox(std::uint8_t v);
std::uint8_t aes_inv_sbox(std::uint8_t v);

/// Intermediate value from explicit bytes. b0/b1 are the public bytes
/// (plaintext or ciphertext depending on kind), k0/k1 the key bytes.
/// SboxOutput and LastRoundTarget ignore k1; SboxOutput ignores b1 too.
std::uint8_t label_value(const IntermediateValueSpec& spec, std::uint8_t b0, std::uint8_t k0,
                         std::uint8_t b1 = 0, std::uint8_t k1 = 0);

/// Same, pulling the bytes out of a trace by spec.byte_index / second index.
std::uint8_t label_trace(const IntermediateValueSpec& spec, const Trace& t);

/// Affine map onto [-1, 1]: (2x - max - min) / (max - min).
/// Throws std::domain_error("degenerate trace") on constant input.
std::vector<double> min_max_rescale(const std::vector<double>& x);

/// Half-open sample range [start, end). Throws std::out_of_range when the
/// range is empty or exceeds the trace length.
std::vector<double> extract_segment(const std::vector<double>& samples, std::size_t start,
                                    std::size_t end);
Trace extract_segment(const Trace& t, std::size_t start, std::size_t end);
TraceSet extract_segment(const TraceSet& ts, std::size_t start, std::size_t end);

/// Dense image, row-major with the channel index fastest (channel-last).
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, 0.0) {}

  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t size() const { return data.size(); }
};

/// A batch of equally shaped images stored back to back, with optional labels.
struct ImageSet {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::size_t count = 0;
  bool has_labels = false;
  std::vector<double> data;          // count * height*width*channels
  std::vector<std::uint8_t> labels;  // count entries when has_labels

  std::size_t example_size() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  const double* example(std::size_t i) const { return data.data() + i * example_size(); }
  double* example(std::size_t i) { return data.data() + i * example_size(); }

  ImageTensor tensor(std::size_t i) const;
  void push_back(const ImageTensor& img, std::optional<std::uint8_t> label);
};

/// Dense row-major matrix of per-example feature vectors.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double* row(std::size_t i) { return data.data() + i * cols; }
};

/// Raw samples of a trace set as a rows x n_samples matrix.
FeatureMatrix to_matrix(const TraceSet& ts);

/// Per-example class probabilities, rows x 256, each row summing to one.
struct Posteriors {
  std::size_t rows = 0;
  std::vector<double> p;  // rows * kNumClasses

  const double* row(std::size_t i) const { return p.data() + i * kNumClasses; }
  double* row(std::size_t i) { return p.data() + i * kNumClasses; }
};

}  // namespace sca2d

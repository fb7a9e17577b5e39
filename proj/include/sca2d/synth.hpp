#pragma once

#include <cstdint>
#include <vector>

#include "sca2d/core.hpp"

// Synthetic AES leakage with controllable SNR, optional first-order boolean
// masking, and optional desynchronization. All randomness is derived from
// one seed; trace i draws from its own generator, so a set is reproducible
// and individual traces are independent of the set size.

namespace sca2d::synth {

struct SynthConfig {
  std::size_t n_traces = 3000;
  std::size_t n_samples = 40;
  SetRole role = SetRole::Profiling;
  Block16 key{};
  IntermediateValueSpec spec;
  /// Sample positions carrying the leak; empty resolves to the center (or,
  /// for masked traces, to the third points). Masked mode needs exactly two.
  std::vector<int> leak_indices;
  double leak_scale = 0.3;
  double noise_sigma = 0.0;
  int desync_max = 0;      // per-trace right shift drawn from U[0, desync_max]
  bool masked = false;
  double sample_frequency = 0.625e9;
  std::uint64_t seed = 1;

  std::vector<int> resolved_leak_indices() const;
};

/// Deterministic sinusoid mixture all traces share: a DC level of 2 plus
/// three seeded harmonics, giving the images realistic periodic texture.
std::vector<double> carrier_wave(const SynthConfig& cfg);

/// Trace i: carrier + leak_scale * (HW(v) - 4) at each leak index + white
/// Gaussian noise, then an optional right shift by U[0, desync_max] with
/// zero fill. Unmasked, v is the labelled intermediate; masked, the first
/// leak index carries HW(mask) and the second HW(Sbox(p^k) ^ mask), while
/// the label stays the unmasked S-box output. Per-trace draw order:
/// public bytes, mask, noise (only when sigma > 0), shift offset.
TraceSet generate(const SynthConfig& cfg);

/// Noise level that makes the single-sample correlation between the leaking
/// sample and HW(v) equal rho (|rho| in (0, 1]): sigma =
/// leak_scale * sqrt(2 * (1 - rho^2)) / rho, using Var(HW) = 2.
double noise_sigma_for_rho(double leak_scale, double rho);

}  // namespace sca2d::synth

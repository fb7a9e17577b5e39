#include "sca2d/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "sca2d/augment.hpp"  // shift1d
#include "sca2d/nn.hpp"       // mix_seed
#include "sca2d/threading.hpp"

namespace sca2d::synth {

std::vector<int> SynthConfig::resolved_leak_indices() const {
  if (!leak_indices.empty()) return leak_indices;
  const int n = static_cast<int>(n_samples);
  if (masked) return {n / 3, 2 * n / 3};
  return {n / 2};
}

std::vector<double> carrier_wave(const SynthConfig& cfg) {
  const std::size_t n = cfg.n_samples;
  std::mt19937_64 rng(nn::mix_seed(cfg.seed, 0xca5517e5));
  std::uniform_int_distribution<int> freq(1, std::max<int>(2, static_cast<int>(n) / 8));
  std::uniform_real_distribution<double> amp(0.2, 0.8);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  std::vector<double> wave(n, 2.0);  // DC keeps the carrier well away from zero
  for (int h = 0; h < 3; ++h) {
    const int f = freq(rng);
    const double a = amp(rng);
    const double p = phase(rng);
    for (std::size_t t = 0; t < n; ++t)
      wave[t] += a * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t + 1) /
                                  static_cast<double>(n) +
                              p);
  }
  return wave;
}

double noise_sigma_for_rho(double leak_scale, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must be in (0,1]");
  if (leak_scale <= 0.0) throw std::invalid_argument("leak_scale must be positive");
  return leak_scale * std::sqrt(2.0 * (1.0 - rho * rho)) / rho;
}

TraceSet generate(const SynthConfig& cfg) {
  if (cfg.n_traces == 0 || cfg.n_samples == 0)
    throw std::invalid_argument("empty synthetic set requested");
  if (cfg.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be nonnegative");
  if (cfg.desync_max < 0 || cfg.desync_max >= static_cast<int>(cfg.n_samples))
    throw std::invalid_argument("desync_max must be in [0, n_samples)");
  const std::vector<int> leaks = cfg.resolved_leak_indices();
  for (int idx : leaks) {
    if (idx < 0 || idx >= static_cast<int>(cfg.n_samples))
      throw std::invalid_argument("leak index outside the trace");
    if (idx + cfg.desync_max >= static_cast<int>(cfg.n_samples))
      throw std::invalid_argument("desync would shift the leak out of the trace");
  }
  if (cfg.masked) {
    if (leaks.size() != 2)
      throw std::invalid_argument("masked mode needs exactly two leak indices");
    if (cfg.spec.kind != TargetKind::SboxOutput)
      throw std::invalid_argument("masked mode only supports the S-box target");
  }

  const std::vector<double> carrier = carrier_wave(cfg);

  TraceSet ts;
  ts.n_samples = cfg.n_samples;
  ts.role = cfg.role;
  ts.sample_frequency = cfg.sample_frequency;
  ts.has_key = true;
  ts.traces.resize(cfg.n_traces);

  parallel_for(cfg.n_traces, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Trace& tr = ts.traces[i];
      std::mt19937_64 rng(nn::mix_seed(cfg.seed, 0x7261ce, i));
      std::uniform_int_distribution<int> byte(0, 255);

      tr.key = cfg.key;
      for (auto& b : tr.public_data) b = static_cast<std::uint8_t>(byte(rng));
      std::uint8_t mask = 0;
      if (cfg.masked) mask = static_cast<std::uint8_t>(byte(rng));
      tr.label = label_trace(cfg.spec, tr);

      tr.samples = carrier;
      if (cfg.masked) {
        const std::uint8_t sbox_out = *tr.label;
        tr.samples[leaks[0]] += cfg.leak_scale * (hamming_weight(mask) - 4);
        tr.samples[leaks[1]] += cfg.leak_scale * (hamming_weight(sbox_out ^ mask) - 4);
      } else {
        const double leak = cfg.leak_scale * (hamming_weight(*tr.label) - 4);
        for (int idx : leaks) tr.samples[idx] += leak;
      }

      if (cfg.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        for (double& s : tr.samples) s += noise(rng);
      }

      if (cfg.desync_max > 0) {
        std::uniform_int_distribution<int> shift(0, cfg.desync_max);
        tr.samples = augment::shift1d(tr.samples, shift(rng));
      }
    }
  });
  return ts;
}

}  // namespace sca2d::synth

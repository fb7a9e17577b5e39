#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "sca2d/leakage.hpp"
#include "sca2d/synth.hpp"

using namespace sca2d;
using namespace sca2d::synth;

TEST_CASE("same seed reproduces the trace set bit-exactly") {
  SynthConfig cfg;
  cfg.n_traces = 50;
  cfg.n_samples = 24;
  cfg.noise_sigma = 1.0;
  cfg.desync_max = 5;
  cfg.seed = 77;
  const TraceSet a = generate(cfg);
  const TraceSet b = generate(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.traces[i].samples == b.traces[i].samples);
    CHECK(a.traces[i].public_data == b.traces[i].public_data);
    CHECK(a.traces[i].label == b.traces[i].label);
  }

  SynthConfig other = cfg;
  other.seed = 78;
  const TraceSet c = generate(other);
  bool all_same = true;
  for (std::size_t i = 0; i < a.size() && all_same; ++i)
    all_same = a.traces[i].samples == c.traces[i].samples;
  CHECK(!all_same);
}

TEST_CASE("noiseless leak correlates perfectly at its index") {
  SynthConfig cfg;
  cfg.n_traces = 400;
  cfg.n_samples = 20;
  cfg.leak_indices = {13};
  cfg.noise_sigma = 0.0;
  cfg.seed = 3;
  const TraceSet ts = generate(cfg);

  std::vector<std::uint8_t> labels(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) labels[i] = *ts.traces[i].label;
  const auto leak = leakage::leakage_values(labels, leakage::LeakageModel::HammingWeight);
  const auto map = leakage::correlation_map_1d(ts, leak);
  const auto peak = leakage::peak_abs(map);
  CHECK(peak.col == 13);
  CHECK(std::abs(peak.rho) == doctest::Approx(1.0).epsilon(1e-9));
  // every other sample is the deterministic carrier: flagged, not correlated
  for (int i = 0; i < 20; ++i) {
    if (i == 13) continue;
    CHECK(map.degenerate[i] == 1);
    CHECK(map.rho[i] == 0.0);
  }
}

TEST_CASE("labels follow the configured intermediate value") {
  SynthConfig cfg;
  cfg.n_traces = 64;
  cfg.n_samples = 8;
  cfg.key[0] = 0x2B;
  cfg.seed = 5;
  const TraceSet ts = generate(cfg);
  for (const Trace& t : ts.traces) {
    REQUIRE(t.label.has_value());
    CHECK(*t.label == aes_sbox(t.public_data[0] ^ 0x2B));
    CHECK(t.key[0] == 0x2B);
  }
}

TEST_CASE("masking removes first-order label leakage but keeps the label unmasked") {
  SynthConfig cfg;
  cfg.n_traces = 1000;
  cfg.n_samples = 30;
  cfg.masked = true;
  cfg.leak_indices = {7, 21};
  cfg.noise_sigma = 0.0;
  cfg.key[0] = 0x11;
  cfg.seed = 8;
  const TraceSet ts = generate(cfg);

  std::vector<std::uint8_t> labels(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    labels[i] = *ts.traces[i].label;
    // label is the unmasked S-box output even though the samples carry shares
    CHECK(labels[i] == aes_sbox(ts.traces[i].public_data[0] ^ 0x11));
  }
  const auto leak = leakage::leakage_values(labels, leakage::LeakageModel::HammingWeight);
  const auto map = leakage::correlation_map_1d(ts, leak);
  CHECK(std::abs(map.rho[7]) < 0.15);
  CHECK(std::abs(map.rho[21]) < 0.15);

  // the first share is HW(mask): nine distinct levels at index 7
  std::map<double, int> levels;
  for (const Trace& t : ts.traces) ++levels[t.samples[7]];
  CHECK(levels.size() == 9);

  // the two shares combine to the label: HW recovered from the samples
  const auto carrier = carrier_wave(cfg);
  for (const Trace& t : ts.traces) {
    const auto hw_at = [&](int idx) {
      return static_cast<int>(std::lround((t.samples[idx] - carrier[idx]) / cfg.leak_scale)) +
             4;
    };
    const int hw_mask = hw_at(7);
    const int hw_shared = hw_at(21);
    CHECK(hw_mask >= 0);
    CHECK(hw_mask <= 8);
    CHECK(hw_shared >= 0);
    CHECK(hw_shared <= 8);
  }

  SynthConfig bad = cfg;
  bad.leak_indices = {7};
  CHECK_THROWS_AS((void)generate(bad), std::invalid_argument);
}

TEST_CASE("desynchronization is a per-trace right shift of the aligned set") {
  SynthConfig aligned;
  aligned.n_traces = 80;
  aligned.n_samples = 32;
  aligned.leak_indices = {10};
  aligned.noise_sigma = 0.5;
  aligned.seed = 21;
  SynthConfig desync = aligned;
  desync.desync_max = 6;

  const TraceSet a = generate(aligned);
  const TraceSet d = generate(desync);
  bool saw_nonzero = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.traces[i].public_data == d.traces[i].public_data);
    int offset = -1;
    for (int o = 0; o <= 6; ++o) {
      bool match = true;
      for (std::size_t s = 0; s < 32 && match; ++s) {
        const double want =
            s < static_cast<std::size_t>(o) ? 0.0 : a.traces[i].samples[s - o];
        match = d.traces[i].samples[s] == want;
      }
      if (match) {
        offset = o;
        break;
      }
    }
    REQUIRE(offset >= 0);
    if (offset > 0) saw_nonzero = true;
  }
  CHECK(saw_nonzero);
}

TEST_CASE("plaintext bytes are uniform") {
  SynthConfig cfg;
  cfg.n_traces = 100000;
  cfg.n_samples = 8;
  cfg.leak_indices = {4};
  cfg.seed = 1;
  const TraceSet ts = generate(cfg);
  std::vector<double> counts(256, 0.0);
  for (const Trace& t : ts.traces) counts[t.public_data[0]] += 1.0;
  const double expected = 100000.0 / 256.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // chi-square critical value for 255 degrees of freedom at p = 0.001
  CHECK(chi2 < 330.52);
}

TEST_CASE("noise level for a target single-sample correlation") {
  const double ls = 0.3;
  const double sigma = noise_sigma_for_rho(ls, 0.5);
  CHECK(sigma == doctest::Approx(ls * std::sqrt(6.0)).epsilon(1e-12));
  CHECK(noise_sigma_for_rho(ls, 1.0) == doctest::Approx(0.0));

  SynthConfig cfg;
  cfg.n_traces = 3000;
  cfg.n_samples = 16;
  cfg.leak_indices = {9};
  cfg.leak_scale = ls;
  cfg.noise_sigma = sigma;
  cfg.seed = 12;
  const TraceSet ts = generate(cfg);
  std::vector<std::uint8_t> labels(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) labels[i] = *ts.traces[i].label;
  const auto leak = leakage::leakage_values(labels, leakage::LeakageModel::HammingWeight);
  const auto map = leakage::correlation_map_1d(ts, leak);
  CHECK(std::abs(map.rho[9]) == doctest::Approx(0.5).epsilon(0.12));

  CHECK_THROWS_AS((void)noise_sigma_for_rho(ls, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)noise_sigma_for_rho(ls, 1.5), std::invalid_argument);
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.n_samples = 10;
  cfg.leak_indices = {10};
  CHECK_THROWS_AS((void)generate(cfg), std::invalid_argument);

  SynthConfig shift = {};
  shift.n_samples = 10;
  shift.desync_max = 10;
  CHECK_THROWS_AS((void)generate(shift), std::invalid_argument);

  SynthConfig none = {};
  none.n_traces = 0;
  CHECK_THROWS_AS((void)generate(none), std::invalid_argument);
}

TEST_CASE("carrier wave is deterministic and sized to the trace") {
  SynthConfig cfg;
  cfg.n_samples = 25;
  cfg.seed = 2;
  const auto a = carrier_wave(cfg);
  const auto b = carrier_wave(cfg);
  CHECK(a == b);
  CHECK(a.size() == 25);
  cfg.seed = 3;
  CHECK(carrier_wave(cfg) != a);
}

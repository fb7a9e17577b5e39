#include "sca2d/leakage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sca2d::leakage {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("inputs must have equal nonzero length");
  const std::size_t n = a.size();
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw std::domain_error("zero variance");
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> leakage_values(const std::vector<std::uint8_t>& labels, LeakageModel model) {
  std::vector<double> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[i] = model == LeakageModel::HammingWeight
                 ? static_cast<double>(hamming_weight(labels[i]))
                 : static_cast<double>(labels[i]);
  return out;
}

namespace {

// Shared two-pass core: rows = observations, `get(i, j)` reads position j of
// observation i. Positions with zero variance are flagged and set to 0.
template <typename Get>
CorrelationMap correlate_positions(std::size_t n_obs, std::size_t n_pos,
                                   const std::vector<double>& leak, const Get& get) {
  if (leak.size() != n_obs) throw std::invalid_argument("one leakage value per observation");
  if (n_obs < 2) throw std::invalid_argument("need at least two observations");

  double leak_mean = 0.0;
  for (double v : leak) leak_mean += v;
  leak_mean /= static_cast<double>(n_obs);
  double leak_ss = 0.0;
  for (double v : leak) leak_ss += (v - leak_mean) * (v - leak_mean);
  const auto [leak_lo, leak_hi] = std::minmax_element(leak.begin(), leak.end());
  if (*leak_lo == *leak_hi || leak_ss == 0.0) throw std::domain_error("zero variance");

  std::vector<double> mean(n_pos, 0.0);
  std::vector<double> lo(n_pos, std::numeric_limits<double>::infinity());
  std::vector<double> hi(n_pos, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n_obs; ++i)
    for (std::size_t j = 0; j < n_pos; ++j) {
      const double v = get(i, j);
      mean[j] += v;
      lo[j] = std::min(lo[j], v);
      hi[j] = std::max(hi[j], v);
    }
  for (double& m : mean) m /= static_cast<double>(n_obs);

  std::vector<double> cross(n_pos, 0.0), ss(n_pos, 0.0);
  for (std::size_t i = 0; i < n_obs; ++i) {
    const double dl = leak[i] - leak_mean;
    for (std::size_t j = 0; j < n_pos; ++j) {
      const double d = get(i, j) - mean[j];
      cross[j] += d * dl;
      ss[j] += d * d;
    }
  }

  CorrelationMap map;
  map.rho.resize(n_pos);
  map.degenerate.assign(n_pos, 0);
  for (std::size_t j = 0; j < n_pos; ++j) {
    // constancy is decided on the raw values; the centered sum of squares of
    // a constant column is not exactly zero once the mean has been rounded
    if (lo[j] == hi[j] || ss[j] == 0.0) {
      map.rho[j] = 0.0;
      map.degenerate[j] = 1;
    } else {
      map.rho[j] = cross[j] / std::sqrt(ss[j] * leak_ss);
    }
  }
  return map;
}

}  // namespace

CorrelationMap correlation_map_1d(const TraceSet& ts, const std::vector<double>& leak) {
  ts.validate();
  CorrelationMap map = correlate_positions(
      ts.traces.size(), ts.n_samples, leak,
      [&](std::size_t i, std::size_t j) { return ts.traces[i].samples[j]; });
  map.height = 1;
  map.width = static_cast<int>(ts.n_samples);
  map.channels = 1;
  return map;
}

CorrelationMap correlation_map_2d(const ImageSet& images, const std::vector<double>& leak) {
  CorrelationMap map = correlate_positions(
      images.count, images.example_size(), leak,
      [&](std::size_t i, std::size_t j) { return images.data[i * images.example_size() + j]; });
  map.height = images.height;
  map.width = images.width;
  map.channels = images.channels;
  return map;
}

Peak peak_abs(const CorrelationMap& map) {
  if (map.rho.empty()) throw std::invalid_argument("empty correlation map");
  Peak best;
  best.rho = map.rho[0];
  for (std::size_t j = 1; j < map.rho.size(); ++j)
    if (std::abs(map.rho[j]) > std::abs(best.rho)) {
      best.flat = j;
      best.rho = map.rho[j];
    }
  const int per_row = map.width * map.channels;
  best.row = static_cast<int>(best.flat) / per_row;
  best.col = (static_cast<int>(best.flat) % per_row) / map.channels;
  best.channel = static_cast<int>(best.flat) % map.channels;
  return best;
}

}  // namespace sca2d::leakage

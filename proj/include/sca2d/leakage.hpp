#pragma once

#include <cstdint>
#include <vector>

#include "sca2d/core.hpp"

// Correlation-based leakage localization, in the time domain and directly on
// encoded images.

namespace sca2d::leakage {

/// Pearson correlation coefficient. Throws std::domain_error("zero variance")
/// when either input is constant; inputs must have equal nonzero length.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

enum class LeakageModel { HammingWeight, Identity };

/// Per-trace leakage variable derived from the labels: HW(y) or y itself.
std::vector<double> leakage_values(const std::vector<std::uint8_t>& labels, LeakageModel model);

/// Signed correlation of every sample (or pixel) with the leakage variable.
/// Positions whose values never vary across the set get rho = 0 and a
/// degeneracy flag instead of an error.
struct CorrelationMap {
  int height = 1;
  int width = 0;
  int channels = 1;
  std::vector<double> rho;
  std::vector<std::uint8_t> degenerate;

  std::size_t size() const { return rho.size(); }
};

struct Peak {
  std::size_t flat = 0;
  int row = 0;
  int col = 0;
  int channel = 0;
  double rho = 0.0;  // signed value at the |rho| maximum
};

CorrelationMap correlation_map_1d(const TraceSet& ts, const std::vector<double>& leak);
CorrelationMap correlation_map_2d(const ImageSet& images, const std::vector<double>& leak);

/// Location of the largest |rho|; the first position wins on exact ties.
Peak peak_abs(const CorrelationMap& map);

}  // namespace sca2d::leakage

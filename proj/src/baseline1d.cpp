#include "sca2d/baseline1d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sca2d/fft.hpp"

namespace sca2d::baseline1d {

std::vector<double> fft_features(const std::vector<double>& trace) {
  const std::vector<cplx> spec = dft_real(trace);
  const std::size_t bins = trace.size() / 2 + 1;
  std::vector<double> out(bins);
  for (std::size_t b = 0; b < bins; ++b) out[b] = std::abs(spec[b]);
  return out;
}

FeatureMatrix fft_features(const FeatureMatrix& traces) {
  if (traces.rows == 0 || traces.cols == 0) throw std::invalid_argument("empty matrix");
  const std::size_t bins = traces.cols / 2 + 1;
  FeatureMatrix out(traces.rows, bins);
  std::vector<double> row(traces.cols);
  for (std::size_t i = 0; i < traces.rows; ++i) {
    std::copy(traces.row(i), traces.row(i) + traces.cols, row.begin());
    const std::vector<double> f = fft_features(row);
    std::copy(f.begin(), f.end(), out.row(i));
  }
  return out;
}

namespace {

constexpr double kOffDiagTol = 1e-10;
constexpr int kMaxSweeps = 100;

// Cyclic Jacobi eigendecomposition of a symmetric matrix held in `a`
// (row-major n x n, destroyed). Eigenvectors accumulate into the columns
// of `v`.
void jacobi_eigen(std::vector<double>& a, std::vector<double>& v, std::size_t n) {
  v.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        if (p != q) s += a[p * n + q] * a[p * n + q];
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_norm() < kOffDiagTol) return;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a[i * n + p];
          const double aiq = a[i * n + q];
          a[i * n + p] = c * aip - s * aiq;
          a[i * n + q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a[p * n + i];
          const double aqi = a[q * n + i];
          a[p * n + i] = c * api - s * aqi;
          a[q * n + i] = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v[i * n + p];
          const double viq = v[i * n + q];
          v[i * n + p] = c * vip - s * viq;
          v[i * n + q] = s * vip + c * viq;
        }
      }
    }
  }
  if (off_norm() >= kOffDiagTol)
    throw std::runtime_error("jacobi eigendecomposition did not converge");
}

}  // namespace

PcaModel pca_fit(const FeatureMatrix& x, int k) {
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  if (n < 2) throw std::invalid_argument("need at least two observations");
  if (k < 1 || static_cast<std::size_t>(k) > d)
    throw std::invalid_argument("component count must be in [1, dim]");

  PcaModel model;
  model.dim = d;
  model.k = k;
  model.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) model.mean[j] += x.data[i * d + j];
  for (double& m : model.mean) m /= static_cast<double>(n);

  // Sample covariance, upper triangle mirrored.
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.row(i);
    for (std::size_t p = 0; p < d; ++p) {
      const double dp = row[p] - model.mean[p];
      for (std::size_t q = p; q < d; ++q) cov[p * d + q] += dp * (row[q] - model.mean[q]);
    }
  }
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t q = p; q < d; ++q) {
      cov[p * d + q] /= static_cast<double>(n - 1);
      cov[q * d + p] = cov[p * d + q];
    }

  std::vector<double> vecs;
  jacobi_eigen(cov, vecs, d);

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cov[a * d + a] > cov[b * d + b]; });

  model.components.resize(static_cast<std::size_t>(k) * d);
  model.eigenvalues.resize(k);
  for (int c = 0; c < k; ++c) {
    const std::size_t col = order[c];
    model.eigenvalues[c] = std::max(0.0, cov[col * d + col]);
    double* comp = model.components.data() + static_cast<std::size_t>(c) * d;
    for (std::size_t j = 0; j < d; ++j) comp[j] = vecs[j * d + col];
    // Deterministic sign: largest-magnitude entry points up.
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j)
      if (std::abs(comp[j]) > std::abs(comp[arg])) arg = j;
    if (comp[arg] < 0.0)
      for (std::size_t j = 0; j < d; ++j) comp[j] = -comp[j];
  }
  return model;
}

FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& x) {
  if (x.cols != model.dim) throw std::invalid_argument("dimension mismatch with model");
  FeatureMatrix out(x.rows, model.k);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* row = x.row(i);
    for (int c = 0; c < model.k; ++c) {
      const double* comp = model.components.data() + static_cast<std::size_t>(c) * model.dim;
      double acc = 0.0;
      for (std::size_t j = 0; j < model.dim; ++j) acc += (row[j] - model.mean[j]) * comp[j];
      out.data[i * model.k + c] = acc;
    }
  }
  return out;
}

FeatureMatrix pca_reconstruct(const PcaModel& model, const FeatureMatrix& proj) {
  if (proj.cols != static_cast<std::size_t>(model.k))
    throw std::invalid_argument("projection width differs from component count");
  FeatureMatrix out(proj.rows, model.dim);
  for (std::size_t i = 0; i < proj.rows; ++i) {
    double* row = out.row(i);
    for (std::size_t j = 0; j < model.dim; ++j) row[j] = model.mean[j];
    for (int c = 0; c < model.k; ++c) {
      const double w = proj.data[i * model.k + c];
      const double* comp = model.components.data() + static_cast<std::size_t>(c) * model.dim;
      for (std::size_t j = 0; j < model.dim; ++j) row[j] += w * comp[j];
    }
  }
  return out;
}

}  // namespace sca2d::baseline1d

#include "sca2d/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "sca2d/nn.hpp"  // mix_seed
#include "sca2d/threading.hpp"

namespace sca2d::attack {

std::vector<PublicPair> public_pairs(const TraceSet& ts, const IntermediateValueSpec& spec) {
  const int i = spec.byte_index;
  const int j = spec.resolved_second();
  if (i < 0 || i > 15 || j < 0 || j > 15) throw std::out_of_range("byte index outside [0,15]");
  std::vector<PublicPair> out(ts.traces.size());
  for (std::size_t t = 0; t < ts.traces.size(); ++t)
    out[t] = {ts.traces[t].public_data[i], ts.traces[t].public_data[j]};
  return out;
}

namespace {

// y_i(k) for all 256 candidates of one trace.
inline void candidate_labels(const IntermediateValueSpec& spec, PublicPair pub,
                             std::uint8_t second_key, std::uint8_t* y) {
  for (int k = 0; k < kNumClasses; ++k)
    y[k] = label_value(spec, pub.b0, static_cast<std::uint8_t>(k), pub.b1, second_key);
}

inline void add_trace(ScoreVector& d, const double* post_row, const std::uint8_t* y,
                      const std::array<double, kNumClasses>* prior) {
  for (int k = 0; k < kNumClasses; ++k) {
    double p = std::max(post_row[y[k]], kProbFloor);
    d[k] += std::log(p);
    if (prior != nullptr) d[k] -= std::log(std::max((*prior)[y[k]], kProbFloor));
  }
}

}  // namespace

ScoreVector accumulate_scores(const Posteriors& post, const std::vector<PublicPair>& publics,
                              const IntermediateValueSpec& spec, std::uint8_t second_key,
                              const std::array<double, kNumClasses>* prior) {
  if (post.rows != publics.size())
    throw std::invalid_argument("one posterior row per attack trace");
  ScoreVector d{};
  std::uint8_t y[kNumClasses];
  for (std::size_t i = 0; i < post.rows; ++i) {
    candidate_labels(spec, publics[i], second_key, y);
    add_trace(d, post.row(i), y, prior);
  }
  return d;
}

int key_rank(const ScoreVector& scores, std::uint8_t true_key) {
  const double dt = scores[true_key];
  int rank = 1;
  for (int k = 0; k < kNumClasses; ++k) {
    if (k == true_key) continue;
    if (scores[k] >= dt) ++rank;  // pessimistic: ties count against us
  }
  return rank;
}

RankCurve kge_curve(const Posteriors& post, const std::vector<PublicPair>& publics,
                    const IntermediateValueSpec& spec, std::uint8_t true_key, int step,
                    std::uint8_t second_key) {
  if (post.rows != publics.size())
    throw std::invalid_argument("one posterior row per attack trace");
  if (step < 1) throw std::invalid_argument("step must be positive");
  RankCurve curve;
  ScoreVector d{};
  std::uint8_t y[kNumClasses];
  for (std::size_t i = 0; i < post.rows; ++i) {
    candidate_labels(spec, publics[i], second_key, y);
    add_trace(d, post.row(i), y, nullptr);
    const std::size_t n = i + 1;
    if (n % step == 0 || n == post.rows) {
      curve.counts.push_back(static_cast<int>(n));
      curve.ranks.push_back(key_rank(d, true_key));
    }
  }
  return curve;
}

MeanRankCurve mean_curve(const std::vector<RankCurve>& curves) {
  if (curves.empty()) throw std::invalid_argument("no curves to average");
  const std::size_t len = curves[0].counts.size();
  for (const RankCurve& c : curves)
    if (c.counts != curves[0].counts)
      throw std::invalid_argument("curves must share their count grid");

  MeanRankCurve out;
  out.counts = curves[0].counts;
  out.mean.assign(len, 0.0);
  out.min.assign(len, 256.0);
  out.max.assign(len, 0.0);
  for (const RankCurve& c : curves)
    for (std::size_t i = 0; i < len; ++i) {
      out.mean[i] += c.ranks[i];
      out.min[i] = std::min(out.min[i], static_cast<double>(c.ranks[i]));
      out.max[i] = std::max(out.max[i], static_cast<double>(c.ranks[i]));
    }
  for (double& m : out.mean) m /= static_cast<double>(curves.size());
  return out;
}

EvalResult evaluate(const EvalConfig& cfg, const RunFn& run_fn,
                    const std::vector<PublicPair>& publics, const IntermediateValueSpec& spec,
                    std::uint8_t true_key, std::uint8_t second_key) {
  if (cfg.runs < 1 || cfg.attacks_per_run < 1 || cfg.attack_size < 1)
    throw std::invalid_argument("evaluation protocol parameters must be positive");
  const std::size_t need =
      static_cast<std::size_t>(cfg.attacks_per_run) * cfg.attack_size;
  if (publics.size() < need)
    throw std::invalid_argument("attack pool smaller than attacks_per_run * attack_size");

  EvalResult result;
  for (int run = 0; run < cfg.runs; ++run) {
    const std::uint64_t run_seed = nn::mix_seed(cfg.seed, 0xa77ac4, run);
    result.run_seeds.push_back(run_seed);
    const Posteriors post = run_fn(run, run_seed);
    if (post.rows != publics.size())
      throw std::invalid_argument("posterior rows must cover the attack pool");

    std::vector<std::size_t> order(publics.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(nn::mix_seed(cfg.seed, 0x5a3d7e, run));
    std::shuffle(order.begin(), order.end(), rng);

    for (int a = 0; a < cfg.attacks_per_run; ++a) {
      Posteriors sub;
      sub.rows = cfg.attack_size;
      sub.p.resize(static_cast<std::size_t>(cfg.attack_size) * kNumClasses);
      std::vector<PublicPair> sub_pub(cfg.attack_size);
      for (int i = 0; i < cfg.attack_size; ++i) {
        const std::size_t src = order[static_cast<std::size_t>(a) * cfg.attack_size + i];
        std::copy(post.row(src), post.row(src) + kNumClasses, sub.row(i));
        sub_pub[i] = publics[src];
      }
      result.curves.push_back(kge_curve(sub, sub_pub, spec, true_key, cfg.step, second_key));
    }
  }
  result.mean = mean_curve(result.curves);
  return result;
}

// ---------------------------------------------------------------------------
// Gaussian templates

namespace {

// Lower-triangular Cholesky factor; returns false if a pivot collapses.
bool cholesky(std::vector<double>& a, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) sum -= a[i * d + k] * a[j * d + k];
      if (i == j) {
        if (sum <= 0.0 || !std::isfinite(sum)) return false;
        a[i * d + i] = std::sqrt(sum);
      } else {
        a[i * d + j] = sum / a[j * d + j];
      }
    }
    for (std::size_t j = i + 1; j < d; ++j) a[i * d + j] = 0.0;
  }
  return true;
}

}  // namespace

TemplateModel template_fit(const FeatureMatrix& x, const std::vector<std::uint8_t>& labels,
                           double ridge_rel) {
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  if (labels.size() != n) throw std::invalid_argument("one label per observation");
  if (n < 2 || d < 1) throw std::invalid_argument("not enough profiling data");

  TemplateModel model;
  model.dim = d;
  model.means.assign(static_cast<std::size_t>(kNumClasses) * d, 0.0);
  model.observed.assign(kNumClasses, 0);

  std::array<std::size_t, kNumClasses> count{};
  std::vector<double> global(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.row(i);
    double* mean = model.means.data() + static_cast<std::size_t>(labels[i]) * d;
    for (std::size_t j = 0; j < d; ++j) {
      mean[j] += row[j];
      global[j] += row[j];
    }
    ++count[labels[i]];
  }
  for (double& g : global) g /= static_cast<double>(n);
  std::size_t n_classes = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    double* mean = model.means.data() + static_cast<std::size_t>(c) * d;
    if (count[c] > 0) {
      model.observed[c] = 1;
      ++n_classes;
      for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(count[c]);
    } else {
      // No examples: fall back to the global mean so the class scores like
      // an average trace instead of like the origin.
      std::copy(global.begin(), global.end(), mean);
    }
  }
  if (n <= n_classes) throw std::invalid_argument("not enough traces to pool a covariance");

  // Pooled within-class covariance.
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.row(i);
    const double* mean = model.means.data() + static_cast<std::size_t>(labels[i]) * d;
    for (std::size_t p = 0; p < d; ++p) {
      const double dp = row[p] - mean[p];
      for (std::size_t q = p; q < d; ++q) cov[p * d + q] += dp * (row[q] - mean[q]);
    }
  }
  const double denom = static_cast<double>(n - n_classes);
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t q = p; q < d; ++q) {
      cov[p * d + q] /= denom;
      cov[q * d + p] = cov[p * d + q];
    }

  double diag_mean = 0.0;
  for (std::size_t p = 0; p < d; ++p) diag_mean += cov[p * d + p];
  diag_mean /= static_cast<double>(d);
  const double ridge = ridge_rel * diag_mean;  // zero for all-constant features
  for (std::size_t p = 0; p < d; ++p) cov[p * d + p] += ridge;

  model.chol = cov;
  if (!cholesky(model.chol, d)) throw std::runtime_error("singular covariance");
  model.log_det = 0.0;
  for (std::size_t p = 0; p < d; ++p) model.log_det += 2.0 * std::log(model.chol[p * d + p]);
  return model;
}

Posteriors template_predict(const TemplateModel& model, const FeatureMatrix& x) {
  if (x.cols != model.dim) throw std::invalid_argument("dimension mismatch with model");
  const std::size_t d = model.dim;
  Posteriors out;
  out.rows = x.rows;
  out.p.assign(x.rows * kNumClasses, 0.0);

  parallel_for(x.rows, [&](std::size_t begin, std::size_t end) {
    std::vector<double> z(d), loglik(kNumClasses);
    const double norm_const = -0.5 * (model.log_det +
                                      static_cast<double>(d) * std::log(2.0 * std::numbers::pi));
    for (std::size_t i = begin; i < end; ++i) {
      const double* row = x.row(i);
      for (int c = 0; c < kNumClasses; ++c) {
        const double* mean = model.means.data() + static_cast<std::size_t>(c) * d;
        // forward substitution: z = L^{-1} (x - mu), then |z|^2 is the
        // Mahalanobis distance
        double quad = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
          double sum = row[p] - mean[p];
          for (std::size_t q = 0; q < p; ++q) sum -= model.chol[p * d + q] * z[q];
          z[p] = sum / model.chol[p * d + p];
          quad += z[p] * z[p];
        }
        loglik[c] = norm_const - 0.5 * quad;
      }
      const double lmax = *std::max_element(loglik.begin(), loglik.end());
      double sum = 0.0;
      for (int c = 0; c < kNumClasses; ++c) sum += std::exp(loglik[c] - lmax);
      const double lse = lmax + std::log(sum);
      double* prow = out.row(i);
      for (int c = 0; c < kNumClasses; ++c) prow[c] = std::exp(loglik[c] - lse);
    }
  });
  return out;
}

}  // namespace sca2d::attack

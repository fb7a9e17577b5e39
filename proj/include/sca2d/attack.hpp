#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "sca2d/core.hpp"

// Key recovery from classifier posteriors: maximum-likelihood score
// accumulation, pessimistic rank curves, the multi-run evaluation protocol,
// and a pooled-covariance Gaussian template classifier as the classical
// profiling baseline.

namespace sca2d::attack {

using ScoreVector = std::array<double, kNumClasses>;

/// Probabilities below this floor are clamped before the log, so one
/// confidently wrong posterior cannot veto a key candidate outright.
constexpr double kProbFloor = 1e-40;

/// Public bytes of one attack trace, as consumed by label_value: b0 is the
/// byte at spec.byte_index, b1 the one at the resolved second index.
struct PublicPair {
  std::uint8_t b0 = 0;
  std::uint8_t b1 = 0;
};

std::vector<PublicPair> public_pairs(const TraceSet& ts, const IntermediateValueSpec& spec);

/// Log-likelihood score per key candidate: d[k] = sum_i log max(P_i[y_i(k)],
/// floor), with y_i(k) = label_value(spec, b0_i, k, b1_i, second_key). The
/// candidate ranges over the key byte at spec.byte_index; for
/// ConsecutiveSboxXor the second key byte is supplied as known context.
/// With a prior, log prior[y] is subtracted per trace (the uniform prior is
/// a constant shift and is dropped).
ScoreVector accumulate_scores(const Posteriors& post, const std::vector<PublicPair>& publics,
                              const IntermediateValueSpec& spec, std::uint8_t second_key = 0,
                              const std::array<double, kNumClasses>* prior = nullptr);

/// Pessimistic rank of the true key: 1 + #{d > d_true} + #{ties != true}.
/// 1 means uniquely best; full ties give 256.
int key_rank(const ScoreVector& scores, std::uint8_t true_key);

/// Rank of the true key as a function of the number of accumulated traces.
struct RankCurve {
  std::vector<int> counts;
  std::vector<int> ranks;
};

/// Ranks after step, 2*step, ... traces (the final count is always
/// included). Posterior row i must belong to publics[i].
RankCurve kge_curve(const Posteriors& post, const std::vector<PublicPair>& publics,
                    const IntermediateValueSpec& spec, std::uint8_t true_key, int step = 1,
                    std::uint8_t second_key = 0);

struct MeanRankCurve {
  std::vector<int> counts;
  std::vector<double> mean;
  std::vector<double> min;
  std::vector<double> max;
};

MeanRankCurve mean_curve(const std::vector<RankCurve>& curves);

struct EvalConfig {
  int runs = 10;
  int attacks_per_run = 5;
  int attack_size = 2000;
  int step = 1;
  std::uint64_t seed = 1;
};

/// Produces the posteriors of the whole attack pool for one run; called with
/// the run index and a run-specific seed so each run retrains from a fresh
/// initialization. Row order must match the publics vector.
using RunFn = std::function<Posteriors(int run, std::uint64_t run_seed)>;

struct EvalResult {
  MeanRankCurve mean;             // pointwise over runs x attacks
  std::vector<RankCurve> curves;  // run-major
  std::vector<std::uint64_t> run_seeds;
};

/// The full evaluation protocol: `runs` retrainings, each followed by
/// `attacks_per_run` disjoint attacks of `attack_size` traces drawn without
/// replacement from a seeded shuffle of the pool.
EvalResult evaluate(const EvalConfig& cfg, const RunFn& run_fn,
                    const std::vector<PublicPair>& publics, const IntermediateValueSpec& spec,
                    std::uint8_t true_key, std::uint8_t second_key = 0);

// ---------------------------------------------------------------------------
// Gaussian templates

struct TemplateModel {
  std::size_t dim = 0;
  std::vector<double> means;           // 256 x dim; unseen classes hold the global mean
  std::vector<std::uint8_t> observed;  // 256 flags
  std::vector<double> chol;            // lower Cholesky factor of pooled cov + ridge
  double log_det = 0.0;
};

/// Per-class means with one pooled covariance (normalized by N minus the
/// number of observed classes) plus a relative ridge on the diagonal.
/// Throws std::runtime_error("singular covariance") when the factorization
/// fails even after the ridge.
TemplateModel template_fit(const FeatureMatrix& x, const std::vector<std::uint8_t>& labels,
                           double ridge_rel = 1e-6);

/// Gaussian log-likelihoods normalized per row with a uniform prior.
Posteriors template_predict(const TemplateModel& model, const FeatureMatrix& x);

}  // namespace sca2d::attack

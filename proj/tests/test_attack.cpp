#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "sca2d/attack.hpp"
#include "sca2d/core.hpp"

using namespace sca2d;
using namespace sca2d::attack;

namespace {

Posteriors uniform_posteriors(std::size_t n) {
  Posteriors post;
  post.rows = n;
  post.p.assign(n * kNumClasses, 1.0 / kNumClasses);
  return post;
}

// one-hot (up to a tiny floor) on the correct intermediate of every trace
Posteriors oracle_posteriors(const std::vector<PublicPair>& publics,
                             const IntermediateValueSpec& spec, std::uint8_t key,
                             std::uint8_t second_key = 0) {
  Posteriors post;
  post.rows = publics.size();
  post.p.assign(post.rows * kNumClasses, 1e-9);
  for (std::size_t i = 0; i < publics.size(); ++i) {
    const std::uint8_t y = label_value(spec, publics[i].b0, key, publics[i].b1, second_key);
    post.row(i)[y] = 1.0;
  }
  return post;
}

std::vector<PublicPair> random_publics(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<PublicPair> out(n);
  for (auto& p : out) {
    p.b0 = static_cast<std::uint8_t>(byte(rng));
    p.b1 = static_cast<std::uint8_t>(byte(rng));
  }
  return out;
}

}  // namespace

TEST_CASE("single one-hot posterior inverts to the true key") {
  IntermediateValueSpec spec;
  const std::uint8_t key = 0x42;
  const auto publics = random_publics(1, 1);
  const Posteriors post = oracle_posteriors(publics, spec, key);
  const ScoreVector d = accumulate_scores(post, publics, spec);
  int best = 0;
  for (int k = 1; k < kNumClasses; ++k)
    if (d[k] > d[best]) best = k;
  CHECK(best == key);
  CHECK(key_rank(d, key) == 1);
}

TEST_CASE("uniform posteriors carry no information") {
  IntermediateValueSpec spec;
  const auto publics = random_publics(20, 2);
  const ScoreVector d = accumulate_scores(uniform_posteriors(20), publics, spec);
  for (int k = 1; k < kNumClasses; ++k) CHECK(d[k] == doctest::Approx(d[0]).epsilon(1e-12));
  CHECK(key_rank(d, 0x00) == 256);
}

TEST_CASE("scores add across traces") {
  IntermediateValueSpec spec;
  const auto publics = random_publics(2, 3);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(1e-4, 1.0);
  Posteriors post;
  post.rows = 2;
  post.p.resize(2 * kNumClasses);
  for (double& v : post.p) v = u(rng);

  Posteriors first, second;
  first.rows = second.rows = 1;
  first.p.assign(post.p.begin(), post.p.begin() + kNumClasses);
  second.p.assign(post.p.begin() + kNumClasses, post.p.end());

  const ScoreVector both = accumulate_scores(post, publics, spec);
  const ScoreVector a = accumulate_scores(first, {publics[0]}, spec);
  const ScoreVector b = accumulate_scores(second, {publics[1]}, spec);
  for (int k = 0; k < kNumClasses; ++k)
    CHECK(both[k] == doctest::Approx(a[k] + b[k]).epsilon(1e-12));
}

TEST_CASE("per-trace monotone rescaling shifts all scores equally") {
  IntermediateValueSpec spec;
  const auto publics = random_publics(10, 4);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  Posteriors post;
  post.rows = 10;
  post.p.resize(10 * kNumClasses);
  for (double& v : post.p) v = u(rng);

  Posteriors scaled = post;
  std::uniform_real_distribution<double> c(0.5, 2.0);
  for (std::size_t i = 0; i < 10; ++i) {
    const double ci = c(rng);
    for (int k = 0; k < kNumClasses; ++k) scaled.row(i)[k] *= ci;
  }
  const ScoreVector d0 = accumulate_scores(post, publics, spec);
  const ScoreVector d1 = accumulate_scores(scaled, publics, spec);
  const double shift = d1[0] - d0[0];
  for (int k = 0; k < kNumClasses; ++k)
    CHECK(d1[k] - d0[k] == doctest::Approx(shift).epsilon(1e-9));
  // and therefore the rank of any candidate is unchanged
  for (int k = 0; k < kNumClasses; ++k)
    CHECK(key_rank(d0, static_cast<std::uint8_t>(k)) ==
          key_rank(d1, static_cast<std::uint8_t>(k)));
}

TEST_CASE("rank handles ties pessimistically and ignores constant shifts") {
  ScoreVector d{};
  d.fill(0.0);
  d[7] = 10.0;
  CHECK(key_rank(d, 7) == 1);
  CHECK(key_rank(d, 8) == 256);  // tied with 254 others, one candidate above

  d.fill(-3.0);
  CHECK(key_rank(d, 0) == 256);

  d.fill(0.0);
  d[3] = 5.0;
  d[9] = 4.0;
  CHECK(key_rank(d, 9) == 2);

  ScoreVector shifted = d;
  for (double& v : shifted) v += 123.5;
  for (int k = 0; k < kNumClasses; ++k)
    CHECK(key_rank(d, static_cast<std::uint8_t>(k)) ==
          key_rank(shifted, static_cast<std::uint8_t>(k)));
}

TEST_CASE("kge curves for perfect and uniform classifiers") {
  IntermediateValueSpec spec;
  const std::uint8_t key = 0xC3;
  const auto publics = random_publics(50, 5);
  const RankCurve perfect = kge_curve(oracle_posteriors(publics, spec, key), publics, spec,
                                      key);
  REQUIRE(perfect.counts.size() == 50);
  CHECK(perfect.counts.front() == 1);
  CHECK(perfect.counts.back() == 50);
  for (int r : perfect.ranks) CHECK(r == 1);

  const RankCurve flat = kge_curve(uniform_posteriors(50), publics, spec, key);
  for (int r : flat.ranks) CHECK(r == 256);

  const RankCurve stepped = kge_curve(oracle_posteriors(publics, spec, key), publics, spec,
                                      key, 7);
  REQUIRE(!stepped.counts.empty());
  CHECK(stepped.counts.front() == 7);
  CHECK(stepped.counts.back() == 50);  // final count always included
}

TEST_CASE("mean curve is a pointwise average with min and max") {
  RankCurve a, b;
  a.counts = {1, 2};
  a.ranks = {1, 1};
  b.counts = {1, 2};
  b.ranks = {3, 3};
  const MeanRankCurve mean = mean_curve({a, b});
  CHECK(mean.counts == std::vector<int>{1, 2});
  CHECK(mean.mean == std::vector<double>{2.0, 2.0});
  CHECK(mean.min == std::vector<double>{1.0, 1.0});
  CHECK(mean.max == std::vector<double>{3.0, 3.0});
}

TEST_CASE("evaluation protocol slices disjoint attacks and replays exactly") {
  IntermediateValueSpec spec;
  const std::uint8_t key = 0x5A;
  const auto publics = random_publics(120, 6);
  const Posteriors post = oracle_posteriors(publics, spec, key);

  EvalConfig cfg;
  cfg.runs = 2;
  cfg.attacks_per_run = 3;
  cfg.attack_size = 40;
  cfg.step = 10;
  cfg.seed = 9;

  int calls = 0;
  std::vector<std::uint64_t> seen_seeds;
  const RunFn fn = [&](int run, std::uint64_t run_seed) {
    ++calls;
    (void)run;
    seen_seeds.push_back(run_seed);
    return post;
  };
  const EvalResult res = evaluate(cfg, fn, publics, spec, key);
  CHECK(calls == 2);
  CHECK(res.curves.size() == 6);
  CHECK(res.run_seeds.size() == 2);
  CHECK(res.run_seeds[0] != res.run_seeds[1]);
  CHECK(seen_seeds == res.run_seeds);
  for (const RankCurve& c : res.curves) {
    CHECK(c.counts.back() == 40);
    for (int r : c.ranks) CHECK(r == 1);  // oracle classifier
  }
  for (double m : res.mean.mean) CHECK(m == 1.0);

  const EvalResult again = evaluate(cfg, fn, publics, spec, key);
  CHECK(again.run_seeds == res.run_seeds);
  for (std::size_t i = 0; i < res.curves.size(); ++i)
    CHECK(again.curves[i].ranks == res.curves[i].ranks);

  EvalConfig hungry = cfg;
  hungry.attack_size = 50;  // 3 * 50 > 120
  CHECK_THROWS_AS((void)evaluate(hungry, fn, publics, spec, key), std::invalid_argument);
}

TEST_CASE("gaussian templates separate two distant classes") {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> noise(0.0, 0.3);
  const int per_class = 60;
  FeatureMatrix x(2 * per_class, 2);
  std::vector<std::uint8_t> labels(2 * per_class);
  for (int i = 0; i < 2 * per_class; ++i) {
    const int cls = i % 2;
    labels[i] = static_cast<std::uint8_t>(cls);
    const double cx = cls == 0 ? 0.0 : 10.0;
    x.row(i)[0] = cx + noise(rng);
    x.row(i)[1] = cx + noise(rng);
  }
  const TemplateModel model = template_fit(x, labels);
  CHECK(model.observed[0] == 1);
  CHECK(model.observed[1] == 1);
  CHECK(model.observed[2] == 0);

  FeatureMatrix probe(2, 2);
  probe.row(0)[0] = 0.0;
  probe.row(0)[1] = 0.0;
  probe.row(1)[0] = 10.0;
  probe.row(1)[1] = 10.0;
  const Posteriors post = template_predict(model, probe);
  CHECK(post.row(0)[0] > 0.99);
  CHECK(post.row(1)[1] > 0.99);
  for (int i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (int k = 0; k < kNumClasses; ++k) sum += post.row(i)[k];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("identical class means give uniform posteriors") {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> noise(0.0, 1.0);
  FeatureMatrix x(100, 3);
  std::vector<std::uint8_t> labels(100);
  for (int i = 0; i < 100; ++i) {
    labels[i] = static_cast<std::uint8_t>(i % 2);
    for (int d = 0; d < 3; ++d) x.row(i)[d] = noise(rng);
  }
  // force the two empirical class means to agree exactly
  for (int d = 0; d < 3; ++d) {
    double m0 = 0.0, m1 = 0.0;
    for (int i = 0; i < 100; ++i) (i % 2 == 0 ? m0 : m1) += x.row(i)[d];
    m0 /= 50.0;
    m1 /= 50.0;
    for (int i = 0; i < 100; ++i) x.row(i)[d] -= (i % 2 == 0 ? m0 : m1);
  }
  const TemplateModel model = template_fit(x, labels);
  FeatureMatrix probe(1, 3);
  probe.row(0)[0] = 0.5;
  probe.row(0)[1] = -0.2;
  probe.row(0)[2] = 0.1;
  const Posteriors post = template_predict(model, probe);
  for (int k = 0; k < kNumClasses; ++k)
    CHECK(post.row(0)[k] == doctest::Approx(1.0 / 256).epsilon(1e-9));
}

TEST_CASE("degenerate features make the covariance singular") {
  FeatureMatrix x(10, 2);
  std::vector<std::uint8_t> labels(10, 0);
  for (int i = 0; i < 10; ++i) {
    labels[i] = static_cast<std::uint8_t>(i % 2);
    x.row(i)[0] = 1.0;  // constant in every dimension
    x.row(i)[1] = 2.0;
  }
  CHECK_THROWS_WITH_AS((void)template_fit(x, labels), "singular covariance",
                       std::runtime_error);
}

TEST_CASE("public pairs pull the configured byte columns") {
  TraceSet ts;
  ts.n_samples = 1;
  Trace t;
  t.samples = {0.0};
  t.public_data[2] = 0xAB;
  t.public_data[3] = 0xCD;
  ts.traces.push_back(t);
  IntermediateValueSpec spec{TargetKind::ConsecutiveSboxXor, 2, -1};
  const auto pairs = public_pairs(ts, spec);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].b0 == 0xAB);
  CHECK(pairs[0].b1 == 0xCD);
}

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "vqs/engine.hpp"

using namespace vqs;
using namespace vqs::engine;
using estimator::BayesianEstimator;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.hidden = 16;
  c.horizon = 30;
  c.trials = 2;
  c.pretrain_epochs = 5;
  c.probe_pretrain_steps = 5;
  c.seed = 11;
  return c;
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool same_members(const BayesianEstimator& a, const BayesianEstimator& b) {
  if (a.members().size() != b.members().size()) return false;
  for (std::size_t k = 0; k < a.members().size(); ++k) {
    if (!same_bits(a.members()[k].flat(), b.members()[k].flat())) return false;
  }
  return true;
}

bool same_record(const EpisodeRecord& a, const EpisodeRecord& b) {
  auto bits = [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; };
  return a.t == b.t && a.x_index == b.x_index && a.shots.outcomes == b.shots.outcomes && bits(a.lambda, b.lambda) &&
         same_bits(a.scores, b.scores) && a.set_mask == b.set_mask && a.set_size == b.set_size &&
         bits(a.loss, b.loss) && bits(a.soft_size, b.soft_size) && bits(a.avg_loss, b.avg_loss) &&
         bits(a.avg_set_size, b.avg_set_size) && a.skipped_shots == b.skipped_shots &&
         a.theta_skipped == b.theta_skipped && a.w_skipped == b.w_skipped;
}

TrialState fresh_state(const RunConfig& cfg, std::uint64_t seed) {
  const auto pre = pretrain_run(cfg, seed);
  return make_trial_state(cfg, pre, seed, cfg.initial_lambda());
}

}  // namespace

TEST(Modes, Names) {
  for (auto m : {BenchmarkMode::dynamic, BenchmarkMode::static_all, BenchmarkMode::static_threshold,
                 BenchmarkMode::static_probe_estimator}) {
    EXPECT_EQ(mode_from_name(mode_name(m)), m);
  }
  EXPECT_EQ(mode_name(BenchmarkMode::static_all), "static");
  EXPECT_THROW(mode_from_name("adaptive"), ConfigError);
}

TEST(Seeds, TrialRule) {
  EXPECT_EQ(trial_seed(5, 0), 5u);
  EXPECT_EQ(trial_seed(5, 3), 5u + 3u * 9973u);
}

TEST(RunConfig, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.n = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.variant = BayesianEstimator::Variant::dropout;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  EXPECT_NEAR(c.initial_lambda(), std::log(10.0), 1e-15);
}

// Parameters hashed (compared bitwise) before and after every step.
TEST(Property, ModeContracts) {
  for (auto mode : {BenchmarkMode::dynamic, BenchmarkMode::static_all, BenchmarkMode::static_threshold,
                    BenchmarkMode::static_probe_estimator}) {
    auto cfg = small_config();
    cfg.mode = mode;
    auto st = fresh_state(cfg, 3);
    Rng targets(4);
    int theta_moves = 0, w_moves = 0, lambda_moves = 0;
    for (int t = 0; t < 20; ++t) {
      const auto theta = st.theta;
      const auto est = st.estimator;
      const double lambda = st.threshold.lambda();
      sense_step(cfg, st, next_target(cfg, t, targets));
      const bool theta_same = same_bits(theta.flat(), st.theta.flat());
      const bool w_same = same_members(est, st.estimator);
      const bool lambda_same = lambda == st.threshold.lambda();
      theta_moves += !theta_same;
      w_moves += !w_same;
      lambda_moves += !lambda_same;
      if (!updates_models(mode)) {
        ASSERT_TRUE(theta_same) << mode_name(mode);
        ASSERT_TRUE(w_same) << mode_name(mode);
      }
      if (!updates_threshold(mode)) {
        ASSERT_TRUE(lambda_same) << mode_name(mode);
      }
    }
    if (updates_models(mode)) {
      EXPECT_GT(theta_moves, 0) << mode_name(mode);
      EXPECT_EQ(w_moves, 20) << mode_name(mode);
    }
    if (updates_threshold(mode)) {
      EXPECT_EQ(lambda_moves, 20) << mode_name(mode);
    }
  }
}

// With L_t = α the threshold update is a no-op while θ and w still learn.
TEST(SenseStep, LossEqualToAlphaKeepsThreshold) {
  auto cfg = small_config();
  cfg.loss = conformal::LossKind::min_distance;
  auto st = fresh_state(cfg, 5);
  // Force a small set so the distance loss is a positive grid multiple.
  st.threshold = conformal::ThresholdState(-1.0, cfg.step_schedule(), cfg.alpha, conformal::kEmptySetDistance);
  Rng targets(6);
  for (int t = 0; t < 50; ++t) {
    auto probe_run = st;
    const int x = next_target(cfg, t, targets);
    const auto rec = sense_step(cfg, probe_run, x);
    // need a baseline from earlier steps so the advantage is nonzero
    if (!(rec.loss > 0.0 && rec.loss < 1.0) || st.baseline_count == 0) {
      st = probe_run;
      continue;
    }
    auto replay = st;
    replay.threshold = conformal::ThresholdState(st.threshold.lambda(), cfg.step_schedule(), rec.loss,
                                                 conformal::kEmptySetDistance);
    const auto theta = replay.theta;
    const auto est = replay.estimator;
    const auto again = sense_step(cfg, replay, x);
    EXPECT_EQ(again.loss, rec.loss);
    EXPECT_EQ(replay.threshold.lambda(), st.threshold.lambda());
    EXPECT_FALSE(same_members(est, replay.estimator));
    ASSERT_FALSE(again.theta_skipped);
    EXPECT_FALSE(same_bits(theta.flat(), replay.theta.flat()));
    return;
  }
  GTEST_FAIL() << "no step produced a distance loss in (0, 1)";
}

TEST(ProbeGradStep, ZeroRateAndZeroAdvantage) {
  auto cfg = small_config();
  Rng rng(7);
  const auto theta = probe::ProbeParams::random(cfg.layers, rng);
  const auto dist = probe::measurement_distribution(theta, cfg.n, 1.0, probe::MeasurementBasis::hadamard());
  const auto shots = probe::sample_shots(dist, cfg.shots, rng);
  std::vector<double> scores(10);
  for (auto& s : scores) s = uniform(rng, 0.0, 5.0);
  const double g = conformal::soft_set_size(scores, 2.0, cfg.tau);

  auto frozen = cfg;
  frozen.eta_theta = 0.0;
  EXPECT_TRUE(same_bits(probe_grad_step(theta, shots, scores, 2.0, 0.0, 3, frozen).theta.flat(), theta.flat()));
  EXPECT_TRUE(same_bits(probe_grad_step(theta, shots, scores, 2.0, g, 3, cfg).theta.flat(), theta.flat()));
  EXPECT_FALSE(same_bits(probe_grad_step(theta, shots, scores, 2.0, g - 1.0, 3, cfg).theta.flat(), theta.flat()));
}

TEST(ProbeGradStep, AllShotsSkipped) {
  auto cfg = small_config();
  cfg.basis = "computational";
  const probe::ProbeParams zero(cfg.layers);  // |0000>: only outcome 0 has mass
  std::vector<double> scores(10, 1.0);
  const probe::ShotBatch shots{std::vector<std::uint32_t>(cfg.shots, 5)};
  const auto step = probe_grad_step(zero, shots, scores, 2.0, 0.0, 3, cfg);
  EXPECT_TRUE(step.all_skipped);
  EXPECT_EQ(step.skipped_shots, cfg.shots);
  EXPECT_TRUE(same_bits(step.theta.flat(), zero.flat()));
}

namespace {

// E[G](θ) by enumerating all L-shot batches over the oracle distribution.
double exhaustive_expected_g(const std::vector<double>& theta, int n, int shots, double x,
                             const estimator::EstimatorParams& w, double lambda, double tau) {
  const auto p = oracle::hadamard_readout(theta, n, x);
  const std::size_t dim = p.size();
  std::size_t batches = 1;
  for (int l = 0; l < shots; ++l) batches *= dim;
  double e = 0.0;
  for (std::size_t code = 0; code < batches; ++code) {
    probe::ShotBatch b;
    double prob = 1.0;
    std::size_t c = code;
    for (int l = 0; l < shots; ++l) {
      b.outcomes.push_back(static_cast<std::uint32_t>(c % dim));
      prob *= p[c % dim];
      c /= dim;
    }
    const auto post = estimator::forward(w, b);
    double g = 0.0;
    for (double q : post) g += oracle::sigmoid((lambda + std::log(q)) / tau);
    e += prob * g;
  }
  return e;
}

}  // namespace

TEST(ProbeGradStep, ScoreFunctionMatchesExhaustiveExpectation) {
  RunConfig cfg;
  cfg.n = 2;
  cfg.layers = 2;
  cfg.shots = 2;
  Rng rng(2718);
  const auto theta = probe::ProbeParams::random(cfg.layers, rng);
  auto w = estimator::EstimatorParams::init({4, 8, 10}, rng);
  for (std::size_t i = w.shape().head_offset(); i < w.flat().size(); ++i) w.flat()[i] = uniform(rng, -3, 3);
  const int xi = 6;
  const double lambda = 2.0, x = probe::PhaseGrid(10).value(xi), h = 1e-5;
  const std::vector<double> th(theta.flat().begin(), theta.flat().end());

  std::vector<double> oracle_grad(th.size());
  for (std::size_t k = 0; k < th.size(); ++k) {
    auto p = th, m = th;
    p[k] += h;
    m[k] -= h;
    oracle_grad[k] = (exhaustive_expected_g(p, 2, 2, x, w, lambda, cfg.tau) -
                      exhaustive_expected_g(m, 2, 2, x, w, lambda, cfg.tau)) /
                     (2 * h);
  }
  const double baseline = exhaustive_expected_g(th, 2, 2, x, w, lambda, cfg.tau);

  const auto dist = probe::measurement_distribution(theta, 2, x, probe::MeasurementBasis::hadamard());
  const int R = 10000;
  std::vector<double> sum(th.size()), sq(th.size());
  for (int r = 0; r < R; ++r) {
    const auto shots = probe::sample_shots(dist, 2, rng);
    const auto scores = estimator::scores_from_posterior(estimator::forward(w, shots));
    const auto step = probe_grad_step(theta, shots, scores, lambda, baseline, xi, cfg);
    for (std::size_t k = 0; k < th.size(); ++k) {
      sum[k] += step.gradient[k];
      sq[k] += step.gradient[k] * step.gradient[k];
    }
  }
  for (std::size_t k = 0; k < th.size(); ++k) {
    const double mean = sum[k] / R;
    const double se = std::sqrt(std::max(0.0, sq[k] / R - mean * mean) / (R - 1));
    EXPECT_LE(std::abs(mean - oracle_grad[k]), 3 * se + 1e-8) << "coordinate " << k;
  }
}

TEST(PretrainRun, ZeroBudgetKeepsInitialProbe) {
  auto cfg = small_config();
  cfg.probe_pretrain_steps = 0;
  const auto pre = pretrain_run(cfg, 9);
  EXPECT_TRUE(same_bits(pre.theta.flat(), pre.theta_init.flat()));
  EXPECT_TRUE(pre.probe_soft_sizes.empty());
}

TEST(PretrainRun, BeatsUniformAndIsDeterministic) {
  RunConfig cfg;  // full defaults
  const auto a = pretrain_run(cfg, 10);
  const auto b = pretrain_run(cfg, 10);
  EXPECT_EQ(a.dataset.size(), 20u);
  EXPECT_LT(a.cross_entropy_after, std::log(10.0));
  EXPECT_NEAR(a.cross_entropy_before, std::log(10.0), 1e-12);
  EXPECT_TRUE(same_bits(a.theta.flat(), b.theta.flat()));
  EXPECT_TRUE(same_bits(a.members.front().flat(), b.members.front().flat()));
  EXPECT_FALSE(same_bits(a.theta.flat(), a.theta_init.flat()));
}

TEST(PretrainRun, EnsembleMembersDiffer) {
  auto cfg = small_config();
  cfg.variant = BayesianEstimator::Variant::ensemble;
  cfg.train.ensemble_size = 3;
  const auto pre = pretrain_run(cfg, 12);
  ASSERT_EQ(pre.members.size(), 3u);
  EXPECT_FALSE(same_bits(pre.members[0].flat(), pre.members[1].flat()));
}

TEST(RunExperiment, SingleStepHorizon) {
  auto cfg = small_config();
  cfg.horizon = 1;
  const auto res = run_experiment(cfg);
  ASSERT_EQ(res.trials.size(), 2u);
  for (const auto& tr : res.trials) EXPECT_EQ(tr.records.size(), 1u);
  EXPECT_EQ(res.aggregate.size(), 1u);
  EXPECT_FALSE(res.partial);
}

TEST(RunExperiment, StaticThresholdDrawn) {
  auto cfg = small_config();
  cfg.mode = BenchmarkMode::static_all;
  cfg.trials = 5;
  const auto res = run_experiment(cfg);
  for (const auto& tr : res.trials) {
    EXPECT_GE(tr.static_lambda, 0.0);
    EXPECT_LE(tr.static_lambda, 2.0);
    EXPECT_EQ(tr.final_lambda, tr.static_lambda);
    for (const auto& r : tr.records) EXPECT_EQ(r.lambda, tr.static_lambda);
  }
  EXPECT_NE(res.trials[0].static_lambda, res.trials[1].static_lambda);
}

TEST(RunExperiment, EnsembleOfOneEqualsPoint) {
  auto cfg = small_config();
  const auto point = run_trial(cfg, 13);
  cfg.variant = BayesianEstimator::Variant::ensemble;
  cfg.train.ensemble_size = 1;
  const auto ens = run_trial(cfg, 13);
  ASSERT_EQ(point.records.size(), ens.records.size());
  for (std::size_t i = 0; i < point.records.size(); ++i) ASSERT_TRUE(same_record(point.records[i], ens.records[i]));
}

class RunInvariants : public ::testing::TestWithParam<BenchmarkMode> {};

TEST_P(RunInvariants, RecordsAreConsistent) {
  auto cfg = small_config();
  cfg.mode = GetParam();
  cfg.horizon = 60;
  const auto res = run_experiment(cfg);
  for (const auto& tr : res.trials) {
    double loss_sum = 0.0, size_sum = 0.0, drift = 0.0;
    for (std::size_t i = 0; i < tr.records.size(); ++i) {
      const auto& r = tr.records[i];
      loss_sum += r.loss;
      size_sum += r.set_size;
      EXPECT_NEAR(r.avg_loss, loss_sum / (i + 1.0), 1e-12);
      EXPECT_NEAR(r.avg_set_size, size_sum / (i + 1.0), 1e-12);
      EXPECT_EQ(r.set_size, conformal::build_set(r.scores, r.lambda).cardinality());
      EXPECT_EQ(r.loss, r.set_mask[r.x_index] ? 0.0 : 1.0);
      // λ_{t+1} = λ_t + η (L_t − α) along the recorded trajectory
      const double next = i + 1 < tr.records.size() ? tr.records[i + 1].lambda : tr.final_lambda;
      const double step = updates_threshold(cfg.mode) ? cfg.eta * (r.loss - cfg.alpha) : 0.0;
      EXPECT_NEAR(next - r.lambda, step, 1e-12);
      drift += step;
    }
    EXPECT_NEAR(tr.final_lambda - tr.initial_lambda, drift, 1e-9);
    if (updates_threshold(cfg.mode)) {
      const double T = static_cast<double>(tr.records.size());
      EXPECT_LE(loss_sum / T, cfg.alpha + conformal::risk_bound(tr.records.size(), cfg.step_schedule(), 1.0));
    }
  }
  // aggregate rows equal the trial means
  for (std::size_t i = 0; i < res.aggregate.size(); ++i) {
    double cov = 0.0;
    for (const auto& tr : res.trials) cov += 1.0 - tr.records[i].avg_loss;
    EXPECT_NEAR(res.aggregate[i].mean_coverage, cov / res.trials.size(), 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(AllModes, RunInvariants,
                         ::testing::Values(BenchmarkMode::dynamic, BenchmarkMode::static_all,
                                           BenchmarkMode::static_threshold, BenchmarkMode::static_probe_estimator),
                         [](const auto& info) {
                           auto s = mode_name(info.param);
                           for (auto& c : s) c = c == '-' ? '_' : c;
                           return s;
                         });

TEST(Property, ReproducibleRecordStreams) {
  for (auto variant : {BayesianEstimator::Variant::point, BayesianEstimator::Variant::dropout}) {
    auto cfg = small_config();
    cfg.variant = variant;
    if (variant == BayesianEstimator::Variant::dropout) {
      cfg.train.dropout = 0.4;
      cfg.train.dropout_passes = 3;
    }
    const auto a = run_experiment(cfg), b = run_experiment(cfg);
    ASSERT_EQ(a.trials.size(), b.trials.size());
    for (std::size_t k = 0; k < a.trials.size(); ++k) {
      ASSERT_EQ(a.trials[k].records.size(), b.trials[k].records.size());
      for (std::size_t i = 0; i < a.trials[k].records.size(); ++i) {
        ASSERT_TRUE(same_record(a.trials[k].records[i], b.trials[k].records[i]));
      }
    }
    cfg.seed += 1;
    const auto c = run_experiment(cfg);
    EXPECT_FALSE(same_record(a.trials[0].records.back(), c.trials[0].records.back()));
  }
}

TEST(Targets, DriftStaysOnGrid) {
  RunConfig cfg;
  cfg.target = TargetProcess::drift;
  Rng rng(1);
  int lo = 100, hi = -1;
  for (int t = 1; t <= 200; ++t) {
    const int x = next_target(cfg, t, rng);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  EXPECT_EQ(lo, 0);
  EXPECT_EQ(hi, 9);
}

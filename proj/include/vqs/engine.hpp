// Online sensing loop. Each step: probe -> phase channel -> shots -> scores ->
// estimation set -> loss, then feedback updates of the threshold, the
// estimator weights and the probe angles (in that order), subject to the
// benchmark mode.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vqs/conformal.hpp"
#include "vqs/errors.hpp"
#include "vqs/estimator.hpp"
#include "vqs/probe.hpp"
#include "vqs/rng.hpp"

namespace vqs::engine {

using estimator::BayesianEstimator;
using probe::ProbeParams;
using probe::ShotBatch;

enum class BenchmarkMode { dynamic, static_all, static_threshold, static_probe_estimator };

inline BenchmarkMode mode_from_name(const std::string& name) {
  if (name == "dynamic") return BenchmarkMode::dynamic;
  if (name == "static") return BenchmarkMode::static_all;
  if (name == "static-threshold") return BenchmarkMode::static_threshold;
  if (name == "static-probe-estimator") return BenchmarkMode::static_probe_estimator;
  throw ConfigError("unknown benchmark mode '" + name + "'");
}

inline std::string mode_name(BenchmarkMode m) {
  switch (m) {
    case BenchmarkMode::dynamic:
      return "dynamic";
    case BenchmarkMode::static_all:
      return "static";
    case BenchmarkMode::static_threshold:
      return "static-threshold";
    case BenchmarkMode::static_probe_estimator:
      return "static-probe-estimator";
  }
  return "dynamic";
}

inline bool updates_threshold(BenchmarkMode m) {
  return m == BenchmarkMode::dynamic || m == BenchmarkMode::static_probe_estimator;
}
inline bool updates_models(BenchmarkMode m) {
  return m == BenchmarkMode::dynamic || m == BenchmarkMode::static_threshold;
}

enum class TargetProcess { iid, drift };

inline TargetProcess target_from_name(const std::string& name) {
  if (name == "iid") return TargetProcess::iid;
  if (name == "drift") return TargetProcess::drift;
  throw ConfigError("unknown target process '" + name + "'");
}

inline std::string target_name(TargetProcess t) { return t == TargetProcess::iid ? "iid" : "drift"; }

struct RunConfig {
  int n = 4;
  int layers = 4;
  int grid_levels = 10;  // M
  int shots = 10;        // L
  int horizon = 200;     // T
  double alpha = 0.3;
  double tau = 0.5;
  double eta_theta = 1e-3;
  double eta = 0.1;
  conformal::StepSchedule::Kind schedule = conformal::StepSchedule::Kind::constant;
  // Initial threshold; NaN selects log M.
  double lambda1 = std::numeric_limits<double>::quiet_NaN();
  // Static modes draw their fixed threshold uniformly from this interval.
  double static_lambda_lo = 0.0;
  double static_lambda_hi = 2.0;
  int hidden = 64;
  estimator::TrainConfig train;
  BayesianEstimator::Variant variant = BayesianEstimator::Variant::point;
  BenchmarkMode mode = BenchmarkMode::dynamic;
  conformal::LossKind loss = conformal::LossKind::coverage;
  TargetProcess target = TargetProcess::iid;
  int drift_period = 100;
  std::string basis = "hadamard";
  std::uint64_t seed = 1;
  int trials = 5;
  int pretrain_samples = 20;
  int pretrain_epochs = 25;
  int probe_pretrain_steps = 100;

  double initial_lambda() const { return std::isnan(lambda1) ? std::log(static_cast<double>(grid_levels)) : lambda1; }

  conformal::StepSchedule step_schedule() const { return {schedule, eta}; }

  estimator::EstimatorShape estimator_shape() const { return {1 << n, hidden, grid_levels}; }

  void validate() const {
    if (n < 2 || n > qsim::kMaxQubits) throw ConfigError("n must lie in [2, 12]");
    if (layers < 1) throw ConfigError("layers must be >= 1");
    if (grid_levels < 2) throw ConfigError("M must be >= 2");
    if (shots < 1) throw ConfigError("L must be >= 1");
    if (horizon < 1) throw ConfigError("T must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    if (!(eta_theta >= 0.0)) throw ConfigError("eta_theta must be >= 0");
    if (!(eta > 0.0)) throw ConfigError("eta must be > 0");
    if (!(static_lambda_hi >= static_lambda_lo)) throw ConfigError("static threshold interval is empty");
    if (hidden < 1) throw ConfigError("hidden size must be >= 1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (pretrain_samples < 1) throw ConfigError("pretrain_samples must be >= 1");
    if (pretrain_epochs < 0 || probe_pretrain_steps < 0) throw ConfigError("pretraining budgets must be >= 0");
    if (drift_period < 1) throw ConfigError("drift_period must be >= 1");
    train.validate();
    if (variant == BayesianEstimator::Variant::dropout && !(train.dropout > 0.0)) {
      throw ConfigError("dropout estimator needs dropout > 0");
    }
    probe::MeasurementBasis::from_name(basis);
  }
};

// Independent generator streams within one trial.
enum class Stream : std::uint32_t { init = 1, targets = 2, steps = 3, static_threshold = 4, member = 16 };

inline Rng derive_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return Rng(seq);
}

inline Rng derive_rng(std::uint64_t seed, Stream stream, std::uint32_t offset = 0) {
  return derive_rng(seed, static_cast<std::uint32_t>(stream) + offset);
}

// Trial i runs with seed base + i * 9973.
inline std::uint64_t trial_seed(std::uint64_t base, int trial) {
  return base + static_cast<std::uint64_t>(trial) * 9973u;
}

struct EpisodeRecord {
  int t = 0;
  int x_index = 0;
  ShotBatch shots;
  double lambda = 0.0;  // threshold used to build the set (pre-update)
  std::vector<double> scores;
  std::vector<bool> set_mask;
  int set_size = 0;
  double loss = 0.0;
  double soft_size = 0.0;
  double avg_loss = 0.0;
  double avg_set_size = 0.0;
  int skipped_shots = 0;       // shots left out of the θ gradient
  bool theta_skipped = false;  // every shot skipped: θ unchanged
  bool w_skipped = false;      // non-finite estimator gradient
  bool empty_set_cap = false;  // distance loss of an empty set
};

struct ProbeStep {
  ProbeParams theta;
  int skipped_shots = 0;
  bool all_skipped = false;
  std::vector<double> gradient;  // ĝ
};

// Score-function step on the soft set size:
//   ĝ = (G − b) Σ_l ∇_θ log p_θ(s_l | x),   θ' = θ − η_θ ĝ.
// Shots with probability below 1e-12 are left out of the sum.
inline ProbeStep probe_grad_step(const ProbeParams& theta, const ShotBatch& shots, std::span<const double> scores,
                                 double lambda, double baseline, int x_index, const RunConfig& cfg) {
  const double g_soft = conformal::soft_set_size(scores, lambda, cfg.tau);
  const probe::PhaseGrid grid(cfg.grid_levels);
  const auto basis = probe::MeasurementBasis::from_name(cfg.basis);
  const auto per_outcome = probe::log_prob_grad_all(theta, cfg.n, grid.value(x_index), basis);

  ProbeStep out{theta, 0, false, std::vector<double>(theta.size(), 0.0)};
  int used = 0;
  for (auto s : shots.outcomes) {
    const auto& row = per_outcome.at(s);
    if (row.empty()) {
      ++out.skipped_shots;
      continue;
    }
    ++used;
    for (std::size_t k = 0; k < row.size(); ++k) out.gradient[k] += row[k];
  }
  if (used == 0) {
    out.all_skipped = true;
    return out;
  }
  const double advantage = g_soft - baseline;
  for (std::size_t k = 0; k < out.gradient.size(); ++k) {
    out.gradient[k] *= advantage;
    out.theta[k] -= cfg.eta_theta * out.gradient[k];
  }
  return out;
}

struct TrialState {
  ProbeParams theta;
  BayesianEstimator estimator;
  conformal::ThresholdState threshold;
  Rng step_rng;
  // Running mean of G over previous steps.
  double baseline = 0.0;
  long baseline_count = 0;
  int t = 0;
  double loss_sum = 0.0;
  double size_sum = 0.0;

  double baseline_for(double g) const { return baseline_count == 0 ? g : baseline; }
  void observe_soft_size(double g) {
    ++baseline_count;
    baseline += (g - baseline) / static_cast<double>(baseline_count);
  }
};

inline EpisodeRecord sense_step(const RunConfig& cfg, TrialState& st, int x_index) {
  const probe::PhaseGrid grid(cfg.grid_levels);
  const auto basis = probe::MeasurementBasis::from_name(cfg.basis);
  const double x = grid.value(x_index);

  EpisodeRecord rec;
  rec.t = ++st.t;
  rec.x_index = x_index;

  const auto dist = probe::measurement_distribution(st.theta, cfg.n, x, basis);
  rec.shots = probe::sample_shots(dist, cfg.shots, st.step_rng);
  const auto posterior = st.estimator.posterior(rec.shots, st.step_rng);
  rec.scores = estimator::scores_from_posterior(posterior);
  rec.lambda = st.threshold.lambda();
  const auto set = conformal::build_set(rec.scores, rec.lambda);
  rec.set_mask = set.mask();
  rec.set_size = set.cardinality();

  const auto loss = cfg.loss == conformal::LossKind::coverage ? conformal::coverage_loss(x_index, set)
                                                              : conformal::min_distance_loss(x, set, grid);
  rec.loss = loss.value;
  rec.empty_set_cap = loss.empty_set_cap;
  rec.soft_size = conformal::soft_set_size(rec.scores, rec.lambda, cfg.tau);

  if (updates_threshold(cfg.mode)) st.threshold.update(loss);
  if (updates_models(cfg.mode)) {
    rec.w_skipped = !st.estimator.train(rec.shots, x_index, rec.t, st.step_rng);
    const double b = st.baseline_for(rec.soft_size);
    auto step = probe_grad_step(st.theta, rec.shots, rec.scores, rec.lambda, b, x_index, cfg);
    rec.skipped_shots = step.skipped_shots;
    rec.theta_skipped = step.all_skipped;
    st.theta = std::move(step.theta);
    st.observe_soft_size(rec.soft_size);
  }

  st.loss_sum += rec.loss;
  st.size_sum += rec.set_size;
  rec.avg_loss = st.loss_sum / rec.t;
  rec.avg_set_size = st.size_sum / rec.t;
  return rec;
}

inline int next_target(const RunConfig& cfg, int t, Rng& rng) {
  if (cfg.target == TargetProcess::iid) {
    return static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.grid_levels)));
  }
  // Slow oscillation across the grid.
  const double phase = 2.0 * std::numbers::pi * t / cfg.drift_period;
  return static_cast<int>(std::lround(0.5 * (cfg.grid_levels - 1) * (1.0 - std::cos(phase))));
}

struct PretrainResult {
  ProbeParams theta_init{1};
  ProbeParams theta{1};  // θ_1
  std::vector<estimator::EstimatorParams> members;  // w_1 per member
  std::vector<estimator::LabeledShots> dataset;
  double cross_entropy_before = 0.0;
  double cross_entropy_after = 0.0;
  std::vector<double> probe_soft_sizes;  // G per probe pretraining step
};

// θ_init uniform in [-π, π); a dataset of (shots, x) pairs at θ_init with x
// uniform on the grid; estimator members pretrained on it; then θ refined by
// the score-function step on G at λ = λ_1 with shots redrawn from the current
// probe at the dataset phases (cycled in order).
inline PretrainResult pretrain_run(const RunConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = derive_rng(seed, Stream::init);
  const probe::PhaseGrid grid(cfg.grid_levels);
  const auto basis = probe::MeasurementBasis::from_name(cfg.basis);

  PretrainResult out{ProbeParams::random(cfg.layers, rng), ProbeParams(cfg.layers), {}, {}, 0.0, 0.0, {}};
  out.theta = out.theta_init;
  for (int i = 0; i < cfg.pretrain_samples; ++i) {
    const int xi = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.grid_levels)));
    const auto dist = probe::measurement_distribution(out.theta_init, cfg.n, grid.value(xi), basis);
    out.dataset.push_back({probe::sample_shots(dist, cfg.shots, rng), xi});
  }

  const int members = cfg.variant == BayesianEstimator::Variant::ensemble ? cfg.train.ensemble_size : 1;
  auto train_cfg = cfg.train;
  if (cfg.variant != BayesianEstimator::Variant::dropout) train_cfg.dropout = 0.0;
  for (int k = 0; k < members; ++k) {
    Rng member_rng = derive_rng(seed, Stream::member, static_cast<std::uint32_t>(k));
    auto w0 = estimator::EstimatorParams::init(cfg.estimator_shape(), member_rng);
    if (k == 0) out.cross_entropy_before = estimator::mean_cross_entropy(w0, out.dataset);
    out.members.push_back(estimator::pretrain(std::move(w0), out.dataset, train_cfg, cfg.pretrain_epochs, &member_rng));
  }
  out.cross_entropy_after = estimator::mean_cross_entropy(out.members.front(), out.dataset);

  BayesianEstimator est(cfg.variant, out.members, train_cfg);
  const double lambda1 = cfg.initial_lambda();
  double baseline = 0.0;
  for (int step = 0; step < cfg.probe_pretrain_steps; ++step) {
    const auto& sample = out.dataset[static_cast<std::size_t>(step) % out.dataset.size()];
    const auto dist = probe::measurement_distribution(out.theta, cfg.n, grid.value(sample.x_index), basis);
    const auto shots = probe::sample_shots(dist, cfg.shots, rng);
    const auto scores = estimator::scores_from_posterior(est.posterior(shots, rng));
    const double g = conformal::soft_set_size(scores, lambda1, cfg.tau);
    const double b = step == 0 ? g : baseline;
    out.theta = probe_grad_step(out.theta, shots, scores, lambda1, b, sample.x_index, cfg).theta;
    baseline += (g - baseline) / static_cast<double>(step + 1);
    out.probe_soft_sizes.push_back(g);
  }
  return out;
}

struct TrialResult {
  std::uint64_t seed = 0;
  PretrainResult pretrain;
  double static_lambda = std::numeric_limits<double>::quiet_NaN();  // static modes only
  double initial_lambda = 0.0;
  double final_lambda = 0.0;  // λ_{T+1}
  std::vector<EpisodeRecord> records;
};

inline TrialState make_trial_state(const RunConfig& cfg, const PretrainResult& pre, std::uint64_t seed,
                                   double lambda_start) {
  const double l_max = conformal::loss_bound(cfg.loss);
  auto train_cfg = cfg.train;
  if (cfg.variant != BayesianEstimator::Variant::dropout) train_cfg.dropout = 0.0;
  return TrialState{pre.theta,
                    BayesianEstimator(cfg.variant, pre.members, train_cfg),
                    conformal::ThresholdState(lambda_start, cfg.step_schedule(), cfg.alpha, l_max),
                    derive_rng(seed, Stream::steps)};
}

inline TrialResult run_trial(const RunConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TrialResult out;
  out.seed = seed;
  out.pretrain = pretrain_run(cfg, seed);
  double lambda_start = cfg.initial_lambda();
  if (!updates_threshold(cfg.mode)) {
    Rng r = derive_rng(seed, Stream::static_threshold);
    out.static_lambda = uniform(r, cfg.static_lambda_lo, cfg.static_lambda_hi);
    lambda_start = out.static_lambda;
  }
  out.initial_lambda = lambda_start;
  auto st = make_trial_state(cfg, out.pretrain, seed, lambda_start);
  Rng targets = derive_rng(seed, Stream::targets);
  out.records.reserve(static_cast<std::size_t>(cfg.horizon));
  for (int t = 1; t <= cfg.horizon; ++t) {
    out.records.push_back(sense_step(cfg, st, next_target(cfg, t, targets)));
  }
  out.final_lambda = st.threshold.lambda();
  return out;
}

// Cross-trial means per time step.
struct AggregateRow {
  int t = 0;
  double mean_coverage = 0.0;  // 1 − time-averaged loss (coverage loss)
  double mean_avg_loss = 0.0;
  double mean_set_size = 0.0;
  double mean_avg_set_size = 0.0;
  double mean_lambda = 0.0;
};

struct ExperimentResult {
  std::vector<TrialResult> trials;
  std::vector<AggregateRow> aggregate;
  bool partial = false;
  std::string error;
};

inline std::vector<AggregateRow> aggregate(const std::vector<TrialResult>& trials) {
  std::vector<AggregateRow> rows;
  if (trials.empty()) return rows;
  std::size_t steps = trials.front().records.size();
  for (const auto& tr : trials) steps = std::min(steps, tr.records.size());
  const double k = static_cast<double>(trials.size());
  for (std::size_t i = 0; i < steps; ++i) {
    AggregateRow row;
    row.t = trials.front().records[i].t;
    for (const auto& tr : trials) {
      const auto& r = tr.records[i];
      row.mean_avg_loss += r.avg_loss;
      row.mean_set_size += r.set_size;
      row.mean_avg_set_size += r.avg_set_size;
      row.mean_lambda += r.lambda;
    }
    row.mean_avg_loss /= k;
    row.mean_coverage = 1.0 - row.mean_avg_loss;
    row.mean_set_size /= k;
    row.mean_avg_set_size /= k;
    row.mean_lambda /= k;
    rows.push_back(row);
  }
  return rows;
}

// Runs cfg.trials independent trials. A trial that throws stops the
// experiment; completed trials are kept and the result is marked partial.
inline ExperimentResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  ExperimentResult out;
  for (int i = 0; i < cfg.trials; ++i) {
    try {
      out.trials.push_back(run_trial(cfg, trial_seed(cfg.seed, i)));
    } catch (const std::exception& e) {
      out.partial = true;
      out.error = "trial " + std::to_string(i) + ": " + e.what();
      break;
    }
  }
  out.aggregate = aggregate(out.trials);
  return out;
}

}  // namespace vqs::engine

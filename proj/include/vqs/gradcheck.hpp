// Self-checks for every gradient the online updates rely on, each against an
// independent numerical route.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "vqs/conformal.hpp"
#include "vqs/engine.hpp"
#include "vqs/estimator.hpp"
#include "vqs/probe.hpp"
#include "vqs/rng.hpp"

namespace vqs::gradcheck {

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;  // relative, except where `metric` says otherwise
  double tolerance = 0.0;
  std::string metric;
  int evaluated = 0;
};

struct Options {
  std::uint64_t seed = 7;
  // Negative control: scales every analytic gradient by (1 + corrupt) before
  // comparison.
  double corrupt = 0.0;
  int estimator_coords = 50;
  int resamples = 10000;
};

inline double rel_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Backprop through both GRU layers and the head against central differences
// (h = 1e-4) on random coordinates with |g| > 1e-8.
inline CheckResult estimator_backprop(const Options& opt) {
  Rng rng = engine::derive_rng(opt.seed, 101);
  const estimator::EstimatorShape shape{16, 64, 10};
  auto w = estimator::EstimatorParams::init(shape, rng);
  // Nonzero head so gradients reach the recurrent layers.
  auto flat = w.flat();
  for (std::size_t i = shape.head_offset(); i < flat.size(); ++i) flat[i] = uniform(rng, -0.5, 0.5);
  probe::ShotBatch shots;
  for (int l = 0; l < 10; ++l) shots.outcomes.push_back(static_cast<std::uint32_t>(uniform_index(rng, 16)));
  const int label = static_cast<int>(uniform_index(rng, 10));
  const double l2 = 1e-4;

  auto g = estimator::objective_grad(w, shots, label, l2);
  for (auto& v : g) v *= 1.0 + opt.corrupt;

  // Half the coordinates from the recurrent layers, half from the head.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g[i]) > 1e-8) candidates.push_back(i);
  }
  std::vector<std::size_t> recurrent, head;
  for (auto i : candidates) (i < shape.head_offset() ? recurrent : head).push_back(i);

  CheckResult res{"estimator_backprop", true, 0.0, 1e-4, "relative", 0};
  const double h = 1e-4;
  auto probe_coord = [&](std::size_t i) {
    auto wp = w;
    wp.flat()[i] += h;
    const double fp = estimator::objective(wp, shots, label, l2);
    wp.flat()[i] -= 2 * h;
    const double fm = estimator::objective(wp, shots, label, l2);
    const double fd = (fp - fm) / (2 * h);
    res.max_error = std::max(res.max_error, rel_error(g[i], fd));
    ++res.evaluated;
  };
  for (int k = 0; k < opt.estimator_coords; ++k) {
    auto& pool = (k % 2 == 0 && !recurrent.empty()) || head.empty() ? recurrent : head;
    if (pool.empty()) break;
    probe_coord(pool[uniform_index(rng, pool.size())]);
  }
  res.passed = res.evaluated > 0 && res.max_error <= res.tolerance;
  return res;
}

// ∂G/∂C against central differences of G; absolute error.
inline CheckResult soft_size_gradient(const Options& opt) {
  Rng rng = engine::derive_rng(opt.seed, 102);
  CheckResult res{"soft_size_gradient", true, 0.0, 1e-8, "absolute", 0};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> scores(10);
    for (auto& s : scores) s = uniform(rng, 0.0, 5.0);
    const double lambda = uniform(rng, 0.0, 5.0);
    const double tau = uniform(rng, 0.1, 1.0);
    auto g = conformal::soft_size_grad_scores(scores, lambda, tau);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double h = 1e-5;
      auto sp = scores, sm = scores;
      sp[i] += h;
      sm[i] -= h;
      const double fd =
          (conformal::soft_set_size(sp, lambda, tau) - conformal::soft_set_size(sm, lambda, tau)) / (2 * h);
      res.max_error = std::max(res.max_error, std::abs(g[i] * (1.0 + opt.corrupt) - fd));
      ++res.evaluated;
    }
  }
  res.passed = res.max_error <= res.tolerance;
  return res;
}

// ∇_θ log p_θ(s|x) with h = 1e-5 against the same difference at h = 1e-7.
inline CheckResult probe_log_prob(const Options& opt) {
  Rng rng = engine::derive_rng(opt.seed, 103);
  CheckResult res{"probe_log_prob_gradient", true, 0.0, 1e-3, "relative", 0};
  const auto basis = probe::MeasurementBasis::hadamard();
  const probe::PhaseGrid grid(10);
  for (int trial = 0; trial < 5; ++trial) {
    const auto theta = probe::ProbeParams::random(2, rng);
    const double x = grid.value(static_cast<int>(uniform_index(rng, 10)));
    const auto dist = probe::measurement_distribution(theta, 2, x, basis);
    for (std::uint32_t s = 0; s < dist.size(); ++s) {
      if (dist[s] < 1e-6) continue;
      auto coarse = probe::log_prob_grad_theta(theta, 2, x, basis, s, 1e-5);
      const auto fine = probe::log_prob_grad_theta(theta, 2, x, basis, s, 1e-7);
      double norm = 0.0;
      for (double v : fine) norm += v * v;
      if (std::sqrt(norm) <= 1e-6) continue;
      double diff = 0.0;
      for (std::size_t k = 0; k < coarse.size(); ++k) {
        const double d = coarse[k] * (1.0 + opt.corrupt) - fine[k];
        diff += d * d;
      }
      res.max_error = std::max(res.max_error, std::sqrt(diff / norm));
      ++res.evaluated;
    }
  }
  res.passed = res.evaluated > 0 && res.max_error <= res.tolerance;
  return res;
}

// Exact E[G](θ) for a fixed estimator by enumerating all shot batches.
inline double expected_soft_size(const probe::ProbeParams& theta, const engine::RunConfig& cfg,
                                 const estimator::EstimatorParams& w, double lambda, int x_index) {
  const probe::PhaseGrid grid(cfg.grid_levels);
  const auto basis = probe::MeasurementBasis::from_name(cfg.basis);
  const auto dist = probe::measurement_distribution(theta, cfg.n, grid.value(x_index), basis);
  const std::size_t dim = dist.size();
  std::size_t batches = 1;
  for (int l = 0; l < cfg.shots; ++l) batches *= dim;
  double expectation = 0.0;
  probe::ShotBatch shots;
  shots.outcomes.resize(static_cast<std::size_t>(cfg.shots));
  for (std::size_t b = 0; b < batches; ++b) {
    std::size_t code = b;
    double prob = 1.0;
    for (auto& o : shots.outcomes) {
      o = static_cast<std::uint32_t>(code % dim);
      code /= dim;
      prob *= dist[o];
    }
    if (prob == 0.0) continue;
    const auto scores = estimator::scores_from_posterior(estimator::forward(w, shots));
    expectation += prob * conformal::soft_set_size(scores, lambda, cfg.tau);
  }
  return expectation;
}

struct ScoreFunctionComparison {
  std::vector<double> oracle;    // ∇_θ E[G] by central differences of the exact expectation
  std::vector<double> mean;      // mean of ĝ over resamples
  std::vector<double> std_error;
  double max_z = 0.0;            // max_k |mean − oracle| / (3 SE + 1e-8); passes at <= 1
};

// Averages engine::probe_grad_step's ĝ (baseline fixed at the exact E[G])
// over `resamples` independent shot batches, n = 2, L = 2.
inline ScoreFunctionComparison compare_score_function(const Options& opt) {
  engine::RunConfig cfg;
  cfg.n = 2;
  cfg.layers = 2;
  cfg.shots = 2;
  cfg.grid_levels = 10;
  Rng rng = engine::derive_rng(opt.seed, 104);
  const auto theta = probe::ProbeParams::random(cfg.layers, rng);
  auto w = estimator::EstimatorParams::init({4, 8, cfg.grid_levels}, rng);
  auto flat = w.flat();
  for (std::size_t i = w.shape().head_offset(); i < flat.size(); ++i) flat[i] = uniform(rng, -3.0, 3.0);
  const int x_index = 3;
  const double lambda = 2.0;
  const probe::PhaseGrid grid(cfg.grid_levels);
  const auto basis = probe::MeasurementBasis::from_name(cfg.basis);

  ScoreFunctionComparison out;
  const double h = 1e-5;
  out.oracle.resize(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    auto tp = theta, tm = theta;
    tp[k] += h;
    tm[k] -= h;
    out.oracle[k] = (expected_soft_size(tp, cfg, w, lambda, x_index) - expected_soft_size(tm, cfg, w, lambda, x_index)) /
                    (2 * h);
  }
  const double baseline = expected_soft_size(theta, cfg, w, lambda, x_index);

  const auto dist = probe::measurement_distribution(theta, cfg.n, grid.value(x_index), basis);
  std::vector<double> sum(theta.size(), 0.0), sum_sq(theta.size(), 0.0);
  for (int r = 0; r < opt.resamples; ++r) {
    const auto shots = probe::sample_shots(dist, cfg.shots, rng);
    const auto scores = estimator::scores_from_posterior(estimator::forward(w, shots));
    const auto step = engine::probe_grad_step(theta, shots, scores, lambda, baseline, x_index, cfg);
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double g = step.gradient[k] * (1.0 + opt.corrupt);
      sum[k] += g;
      sum_sq[k] += g * g;
    }
  }
  const double n = opt.resamples;
  out.mean.resize(theta.size());
  out.std_error.resize(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    out.mean[k] = sum[k] / n;
    const double var = std::max(0.0, (sum_sq[k] - n * out.mean[k] * out.mean[k]) / (n - 1));
    out.std_error[k] = std::sqrt(var / n);
    // 1e-8 absorbs difference noise on coordinates whose gradient is exactly 0.
    out.max_z = std::max(out.max_z, std::abs(out.mean[k] - out.oracle[k]) / (3.0 * out.std_error[k] + 1e-8));
  }
  return out;
}

inline CheckResult score_function_estimator(const Options& opt) {
  const auto cmp = compare_score_function(opt);
  CheckResult res{"score_function_vs_exhaustive", false, cmp.max_z, 1.0, "max |mean-oracle| / 3SE", 0};
  res.evaluated = static_cast<int>(cmp.oracle.size());
  res.passed = cmp.max_z <= 1.0;
  return res;
}

inline std::vector<CheckResult> run_all(const Options& opt) {
  return {estimator_backprop(opt), soft_size_gradient(opt), probe_log_prob(opt), score_function_estimator(opt)};
}

}  // namespace vqs::gradcheck

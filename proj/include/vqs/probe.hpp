// Sensing front end: permutation-symmetric variational probe, local phase
// channel Rz(x)^⊗n, fixed per-qubit readout basis, shot sampling and the
// θ-gradient of per-shot log-likelihoods.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "vqs/errors.hpp"
#include "vqs/qsim.hpp"
#include "vqs/rng.hpp"

namespace vqs::probe {

using qsim::cplx;
using qsim::Mat2;
using qsim::StateVector;

// Four shared angles per layer: (rz_outer, ry, rz_inner, zz).
// The single-qubit rotation on every qubit is Rz(rz_outer) Ry(ry) Rz(rz_inner);
// the two-qubit gate on every ring edge is exp(-i zz Z⊗Z / 2).
class ProbeParams {
 public:
  static constexpr int kPerLayer = 4;

  explicit ProbeParams(int layers) : layers_(layers), values_(static_cast<std::size_t>(kPerLayer * layers), 0.0) {
    if (layers < 1) throw ConfigError("probe needs at least one layer");
  }
  ProbeParams(int layers, std::vector<double> values) : layers_(layers), values_(std::move(values)) {
    if (layers < 1) throw ConfigError("probe needs at least one layer");
    if (values_.size() != static_cast<std::size_t>(kPerLayer * layers)) {
      throw ConfigError("probe parameter vector must have length 4 * layers");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw ValidationError("probe parameter is not finite");
    }
  }

  // Uniform in [-π, π) per entry.
  static ProbeParams random(int layers, Rng& rng) {
    ProbeParams p(layers);
    for (auto& v : p.values_) v = uniform(rng, -std::numbers::pi, std::numbers::pi);
    return p;
  }

  int layers() const { return layers_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> flat() const { return values_; }
  std::span<double> flat() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double rz_outer(int layer) const { return values_[kPerLayer * layer + 0]; }
  double ry(int layer) const { return values_[kPerLayer * layer + 1]; }
  double rz_inner(int layer) const { return values_[kPerLayer * layer + 2]; }
  double zz(int layer) const { return values_[kPerLayer * layer + 3]; }

  friend bool operator==(const ProbeParams&, const ProbeParams&) = default;

 private:
  int layers_;
  std::vector<double> values_;
};

class PhaseGrid {
 public:
  explicit PhaseGrid(int levels) : levels_(levels) {
    if (levels < 2) throw ConfigError("phase grid needs at least two levels");
  }
  int size() const { return levels_; }
  double spacing() const { return std::numbers::pi / (levels_ - 1); }
  double value(int i) const {
    if (i < 0 || i >= levels_) throw IndexError("grid index out of range");
    return i == levels_ - 1 ? std::numbers::pi : i * spacing();
  }
  std::vector<double> values() const {
    std::vector<double> v(static_cast<std::size_t>(levels_));
    for (int i = 0; i < levels_; ++i) v[static_cast<std::size_t>(i)] = value(i);
    return v;
  }

 private:
  int levels_;
};

// Readout: the same 2x2 unitary on every qubit, then computational-basis
// measurement, i.e. the POVM Π^s = V^†|s⟩⟨s|V with V = U^⊗n.
struct MeasurementBasis {
  Mat2 pre_rotation = qsim::gates::h();

  static MeasurementBasis hadamard() { return {qsim::gates::h()}; }
  static MeasurementBasis computational() { return {qsim::gates::identity()}; }

  static MeasurementBasis from_name(const std::string& name) {
    if (name == "hadamard" || name == "x") return hadamard();
    if (name == "computational" || name == "z") return computational();
    throw ConfigError("unknown measurement basis '" + name + "'");
  }
};

struct ShotBatch {
  std::vector<std::uint32_t> outcomes;

  std::size_t size() const { return outcomes.size(); }
  friend bool operator==(const ShotBatch&, const ShotBatch&) = default;
};

// One ansatz layer: shared single-qubit rotation everywhere, then the shared
// ZZ gate on ring edges (0,1), (1,2), ..., (n-1,0).
inline StateVector prepare_probe(const ProbeParams& theta, int n) {
  if (n < 2) throw ConfigError("ring ansatz needs n >= 2 qubits");
  auto state = qsim::init_zero_state(n);
  for (int l = 0; l < theta.layers(); ++l) {
    const auto u = qsim::gates::euler_zyz(theta.rz_outer(l), theta.ry(l), theta.rz_inner(l));
    for (int q = 0; q < n; ++q) qsim::apply_gate_inplace(state, qsim::GateOp::single(q, u));
    const auto zz = qsim::gates::zz(theta.zz(l));
    // n == 2 has a single edge; (1,0) would apply it twice.
    const int edges = n == 2 ? 1 : n;
    for (int q = 0; q < edges; ++q) {
      qsim::apply_gate_inplace(state, qsim::GateOp::two(q, (q + 1) % n, zz));
    }
  }
  return state;
}

// Rz(x) = diag(1, e^{ix}) on each qubit: amps[s] *= e^{i x popcount(s)}.
inline StateVector apply_phase_channel(StateVector state, double x) {
  auto amps = state.amps();
  const int n = state.num_qubits();
  std::vector<cplx> phase(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) phase[static_cast<std::size_t>(k)] = std::polar(1.0, x * k);
  for (std::size_t s = 0; s < amps.size(); ++s) {
    const int k = std::popcount(s);
    if (k != 0) amps[s] *= phase[static_cast<std::size_t>(k)];
  }
  return state;
}

inline StateVector apply_basis_change(StateVector state, const MeasurementBasis& basis) {
  for (int q = 0; q < state.num_qubits(); ++q) {
    qsim::apply_gate_inplace(state, qsim::GateOp::single(q, basis.pre_rotation));
  }
  return state;
}

// p_θ(s | x) over all 2^n outcomes.
inline std::vector<double> measurement_distribution(const ProbeParams& theta, int n, double x,
                                                    const MeasurementBasis& basis) {
  auto state = apply_phase_channel(prepare_probe(theta, n), x);
  return qsim::outcome_probabilities(apply_basis_change(std::move(state), basis));
}

inline void validate_distribution(std::span<const double> dist, double tol = 1e-9) {
  if (dist.empty()) throw ValidationError("empty distribution");
  double sum = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("distribution entry negative or not finite");
    sum += p;
  }
  if (std::abs(sum - 1.0) > tol) throw ValidationError("distribution does not sum to one");
}

// L i.i.d. inverse-CDF draws.
inline ShotBatch sample_shots(std::span<const double> dist, int shots, Rng& rng) {
  validate_distribution(dist);
  if (shots < 1) throw ConfigError("shot count must be >= 1");
  std::vector<double> cdf(dist.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) cdf[i] = (acc += dist[i]);
  ShotBatch batch;
  batch.outcomes.reserve(static_cast<std::size_t>(shots));
  for (int l = 0; l < shots; ++l) {
    const double u = uniform01(rng) * acc;
    // cdf[i] > u >= cdf[i-1] implies dist[i] > 0.
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    batch.outcomes.push_back(static_cast<std::uint32_t>(it - cdf.begin()));
  }
  return batch;
}

inline constexpr double kGradStep = 1e-5;
inline constexpr double kMinShotProbability = 1e-12;

// Central differences of log p_θ(s|x) for every outcome s at once.
// Row s of the result holds ∇_θ log p_θ(s|x); rows for outcomes whose
// probability (at θ or at a perturbed point) is below kMinShotProbability are
// left empty so callers can skip those shots.
inline std::vector<std::vector<double>> log_prob_grad_all(const ProbeParams& theta, int n, double x,
                                                          const MeasurementBasis& basis,
                                                          double step = kGradStep) {
  const auto base = measurement_distribution(theta, n, x, basis);
  const std::size_t dim = base.size();
  std::vector<std::vector<double>> grad(dim);
  std::vector<bool> ok(dim);
  for (std::size_t s = 0; s < dim; ++s) {
    ok[s] = base[s] > kMinShotProbability;
    if (ok[s]) grad[s].assign(theta.size(), 0.0);
  }
  ProbeParams shifted = theta;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    shifted[k] = theta[k] + step;
    const auto plus = measurement_distribution(shifted, n, x, basis);
    shifted[k] = theta[k] - step;
    const auto minus = measurement_distribution(shifted, n, x, basis);
    shifted[k] = theta[k];
    for (std::size_t s = 0; s < dim; ++s) {
      if (!ok[s]) continue;
      if (plus[s] <= 0.0 || minus[s] <= 0.0) {
        ok[s] = false;
        grad[s].clear();
        continue;
      }
      grad[s][k] = (std::log(plus[s]) - std::log(minus[s])) / (2.0 * step);
    }
  }
  return grad;
}

inline std::vector<double> log_prob_grad_theta(const ProbeParams& theta, int n, double x,
                                               const MeasurementBasis& basis, std::uint32_t outcome,
                                               double step = kGradStep) {
  const auto dist = measurement_distribution(theta, n, x, basis);
  if (outcome >= dist.size()) throw IndexError("outcome index out of range");
  if (dist[outcome] <= kMinShotProbability) {
    throw DegenerateGradientError("outcome probability below 1e-12; log-likelihood gradient undefined");
  }
  std::vector<double> grad(theta.size());
  ProbeParams shifted = theta;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    shifted[k] = theta[k] + step;
    const double plus = measurement_distribution(shifted, n, x, basis)[outcome];
    shifted[k] = theta[k] - step;
    const double minus = measurement_distribution(shifted, n, x, basis)[outcome];
    shifted[k] = theta[k];
    if (plus <= 0.0 || minus <= 0.0) {
      throw DegenerateGradientError("outcome probability vanishes within the difference stencil");
    }
    grad[k] = (std::log(plus) - std::log(minus)) / (2.0 * step);
  }
  return grad;
}

}  // namespace vqs::probe

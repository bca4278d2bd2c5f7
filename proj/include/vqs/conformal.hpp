// Online conformal set prediction: threshold sets over scores, bounded losses,
// the online threshold recursion, the sigmoid soft-cardinality surrogate and
// the long-run loss bound of the threshold recursion.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "vqs/errors.hpp"
#include "vqs/probe.hpp"

namespace vqs::conformal {

class EstimationSet {
 public:
  EstimationSet() = default;
  explicit EstimationSet(std::vector<bool> mask) : mask_(std::move(mask)) {
    cardinality_ = static_cast<int>(std::count(mask_.begin(), mask_.end(), true));
  }

  bool contains(int i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= mask_.size()) throw IndexError("grid index out of range");
    return mask_[static_cast<std::size_t>(i)];
  }
  int cardinality() const { return cardinality_; }
  std::size_t grid_size() const { return mask_.size(); }
  bool empty() const { return cardinality_ == 0; }
  const std::vector<bool>& mask() const { return mask_; }

  bool subset_of(const EstimationSet& other) const {
    for (std::size_t i = 0; i < mask_.size(); ++i) {
      if (mask_[i] && !other.mask_[i]) return false;
    }
    return true;
  }

 private:
  std::vector<bool> mask_;
  int cardinality_ = 0;
};

// {x : C(s, x) <= λ}; the boundary is included.
inline EstimationSet build_set(std::span<const double> scores, double lambda) {
  std::vector<bool> mask(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw ValidationError("score is not finite");
    mask[i] = scores[i] <= lambda;
  }
  return EstimationSet(std::move(mask));
}

enum class LossKind { coverage, min_distance };

inline LossKind loss_kind_from_name(const std::string& name) {
  if (name == "coverage") return LossKind::coverage;
  if (name == "distance" || name == "min-distance") return LossKind::min_distance;
  throw ConfigError("unknown loss kind '" + name + "'");
}

inline std::string loss_kind_name(LossKind k) { return k == LossKind::coverage ? "coverage" : "distance"; }

struct LossValue {
  double value = 0.0;
  LossKind kind = LossKind::coverage;
  bool empty_set_cap = false;
};

// 1{x ∉ set}
inline LossValue coverage_loss(int x_index, const EstimationSet& set) {
  return {set.contains(x_index) ? 0.0 : 1.0, LossKind::coverage, false};
}

inline constexpr double kEmptySetDistance = std::numbers::pi;

// min over members of |x - x̂|; all p-norms agree for a scalar phase, so the
// order is accepted only for interface symmetry. An empty set costs π.
inline LossValue min_distance_loss(double x_value, const EstimationSet& set, const probe::PhaseGrid& grid,
                                   double p = 2.0) {
  if (!(p >= 1.0)) throw ConfigError("norm order must be >= 1");
  if (set.grid_size() != static_cast<std::size_t>(grid.size())) throw ConfigError("set and grid sizes differ");
  if (set.empty()) return {kEmptySetDistance, LossKind::min_distance, true};
  double best = kEmptySetDistance;
  for (int i = 0; i < grid.size(); ++i) {
    if (set.contains(i)) best = std::min(best, std::abs(x_value - grid.value(i)));
  }
  return {best, LossKind::min_distance, false};
}

inline double loss_bound(LossKind k) { return k == LossKind::coverage ? 1.0 : kEmptySetDistance; }

// Step-size schedule η_t, t = 1, 2, ...
struct StepSchedule {
  enum class Kind { constant, decaying };
  Kind kind = Kind::constant;
  double eta = 0.1;  // η for constant, η₁ for decaying (η_t = η₁ / √t)

  static StepSchedule constant(double eta) { return {Kind::constant, eta}; }
  static StepSchedule decaying(double eta1) { return {Kind::decaying, eta1}; }

  double at(long t) const {
    if (t < 1) throw ConfigError("schedule index starts at 1");
    return kind == Kind::constant ? eta : eta / std::sqrt(static_cast<double>(t));
  }

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("threshold step size must be > 0");
  }
};

inline StepSchedule::Kind schedule_kind_from_name(const std::string& name) {
  if (name == "constant") return StepSchedule::Kind::constant;
  if (name == "decaying") return StepSchedule::Kind::decaying;
  throw ConfigError("unknown step schedule '" + name + "'");
}

inline std::string schedule_kind_name(StepSchedule::Kind k) {
  return k == StepSchedule::Kind::constant ? "constant" : "decaying";
}

class ThresholdState {
 public:
  ThresholdState(double lambda, StepSchedule schedule, double alpha, double l_max)
      : lambda_(lambda), schedule_(schedule), alpha_(alpha), l_max_(l_max) {
    schedule_.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("target loss alpha must lie in (0, 1)");
    if (!(l_max > 0.0)) throw ConfigError("loss bound must be > 0");
    if (!std::isfinite(lambda)) throw ConfigError("initial threshold must be finite");
  }

  double lambda() const { return lambda_; }
  double alpha() const { return alpha_; }
  double l_max() const { return l_max_; }
  const StepSchedule& schedule() const { return schedule_; }
  long steps() const { return t_; }
  double cumulative_loss() const { return cumulative_loss_; }
  // Step size the next update will use.
  double next_eta() const { return schedule_.at(t_ + 1); }

  // λ_{t+1} = λ_t + η_t (L_t − α)
  void update(const LossValue& loss) {
    if (!(loss.value >= 0.0 && loss.value <= l_max_)) throw ValidationError("loss outside [0, L_max]");
    ++t_;
    lambda_ += schedule_.at(t_) * (loss.value - alpha_);
    cumulative_loss_ += loss.value;
  }

 private:
  double lambda_;
  StepSchedule schedule_;
  double alpha_;
  double l_max_;
  long t_ = 0;
  double cumulative_loss_ = 0.0;
};

inline ThresholdState update_threshold(ThresholdState state, const LossValue& loss) {
  state.update(loss);
  return state;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// G = Σ_x σ(−(C_x − λ) / τ)
inline double soft_set_size(std::span<const double> scores, double lambda, double tau) {
  if (!(tau > 0.0)) throw ConfigError("temperature must be > 0");
  double g = 0.0;
  for (double c : scores) g += sigmoid(-(c - lambda) / tau);
  return g;
}

// ∂G/∂C_i = −σ(z_i)(1 − σ(z_i)) / τ, z_i = −(C_i − λ) / τ
inline std::vector<double> soft_size_grad_scores(std::span<const double> scores, double lambda, double tau) {
  if (!(tau > 0.0)) throw ConfigError("temperature must be > 0");
  std::vector<double> g(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = sigmoid(-(scores[i] - lambda) / tau);
    g[i] = -s * (1.0 - s) / tau;
  }
  return g;
}

// ∂G/∂λ = −Σ_i ∂G/∂C_i
inline double soft_size_grad_lambda(std::span<const double> scores, double lambda, double tau) {
  double acc = 0.0;
  for (double g : soft_size_grad_scores(scores, lambda, tau)) acc -= g;
  return acc;
}

// Σ_{t≤T} ‖Δ_t‖ with ‖Δ_1‖ = 1/η_1 and ‖Δ_t‖ = 1/η_t − 1/η_{t−1}.
inline double delta_norm_sum(long horizon, const StepSchedule& schedule) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  double sum = 1.0 / schedule.at(1);
  for (long t = 2; t <= horizon; ++t) sum += 1.0 / schedule.at(t) - 1.0 / schedule.at(t - 1);
  return sum;
}

// (L_max + max_t η_t) / T · Σ‖Δ_t‖: bound on the average loss in excess of α.
inline double risk_bound(long horizon, const StepSchedule& schedule, double l_max) {
  double max_eta = 0.0;
  for (long t = 1; t <= horizon; ++t) max_eta = std::max(max_eta, schedule.at(t));
  return (l_max + max_eta) / static_cast<double>(horizon) * delta_norm_sum(horizon, schedule);
}

}  // namespace vqs::conformal

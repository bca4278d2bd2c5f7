// Sequential posterior estimator p_w(x | s): two stacked GRU layers read the
// one-hot shots one by one, a linear head maps the last hidden state to M
// logits, and a softmax gives the posterior over grid phases.
//
// Parameters live in one flat vector (see EstimatorShape for the layout) so
// that L2 decay, finite-difference checks, checkpoints and hashing all work on
// a single contiguous buffer.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vqs/errors.hpp"
#include "vqs/probe.hpp"
#include "vqs/rng.hpp"

namespace vqs::estimator {

using probe::ShotBatch;

inline constexpr double kProbFloor = 1e-12;
inline constexpr int kLayers = 2;

// Per recurrent layer (input width d, hidden width H), in order:
//   W_z, W_r, W_h   H x d each
//   U_z, U_r, U_h   H x H each
//   b_z, b_r, b_h   H each
// followed by the head V (M x H) and its bias c (M).
struct EstimatorShape {
  int input_dim = 16;
  int hidden = 64;
  int output = 10;

  std::size_t layer_input(int layer) const {
    return static_cast<std::size_t>(layer == 0 ? input_dim : hidden);
  }
  std::size_t layer_size(int layer) const {
    const std::size_t h = static_cast<std::size_t>(hidden), d = layer_input(layer);
    return 3 * h * d + 3 * h * h + 3 * h;
  }
  std::size_t layer_offset(int layer) const { return layer == 0 ? 0 : layer_size(0); }
  std::size_t head_offset() const { return layer_size(0) + layer_size(1); }
  std::size_t param_count() const {
    return head_offset() + static_cast<std::size_t>(output) * static_cast<std::size_t>(hidden) +
           static_cast<std::size_t>(output);
  }

  void validate() const {
    if (input_dim < 1 || hidden < 1 || output < 2) throw ConfigError("invalid estimator shape");
  }

  friend bool operator==(const EstimatorShape&, const EstimatorShape&) = default;
};

class EstimatorParams {
 public:
  EstimatorParams(EstimatorShape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    shape_.validate();
    if (data_.size() != shape_.param_count()) throw ConfigError("estimator weight count does not match shape");
  }

  // Recurrent weights and biases uniform in [-1/sqrt(H), 1/sqrt(H)]; the head
  // starts at zero so an untrained model outputs the uniform posterior.
  static EstimatorParams init(EstimatorShape shape, Rng& rng) {
    shape.validate();
    std::vector<double> data(shape.param_count(), 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
    for (std::size_t i = 0; i < shape.head_offset(); ++i) data[i] = uniform(rng, -bound, bound);
    return EstimatorParams(shape, std::move(data));
  }

  const EstimatorShape& shape() const { return shape_; }
  std::span<const double> flat() const { return data_; }
  std::span<double> flat() { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const EstimatorParams&, const EstimatorParams&) = default;

 private:
  EstimatorShape shape_;
  std::vector<double> data_;
};

struct TrainConfig {
  double lr = 0.05;
  double l2 = 1e-4;
  double decay = 0.1;
  int decay_every = 50;
  double dropout = 0.0;
  int ensemble_size = 1;
  int dropout_passes = 10;

  void validate() const {
    if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (!(l2 >= 0.0)) throw ConfigError("L2 coefficient must be >= 0");
    if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("decay must lie in (0, 1]");
    if (decay_every < 1) throw ConfigError("decay period must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    if (ensemble_size < 1) throw ConfigError("ensemble size must be >= 1");
    if (dropout_passes < 1) throw ConfigError("dropout passes must be >= 1");
  }

  // μ · decay^⌊t / decay_every⌋
  double lr_at(int t) const {
    return lr * std::pow(decay, static_cast<double>(std::max(t, 0) / decay_every));
  }
};

// Inverted-dropout keep masks (already scaled by 1/(1-rate)) for the outputs
// of the two recurrent layers; held fixed across the shot sequence.
struct DropoutMasks {
  std::vector<double> layer0;
  std::vector<double> layer1;

  static DropoutMasks sample(int hidden, double rate, Rng& rng) {
    DropoutMasks m;
    const double keep = 1.0 / (1.0 - rate);
    m.layer0.resize(static_cast<std::size_t>(hidden));
    m.layer1.resize(static_cast<std::size_t>(hidden));
    for (auto& v : m.layer0) v = bernoulli(rng, rate) ? 0.0 : keep;
    for (auto& v : m.layer1) v = bernoulli(rng, rate) ? 0.0 : keep;
    return m;
  }
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Views into one recurrent layer's parameter block.
template <typename T>
struct LayerView {
  T* wz;
  T* wr;
  T* wh;
  T* uz;
  T* ur;
  T* uh;
  T* bz;
  T* br;
  T* bh;

  static LayerView at(T* base, const EstimatorShape& s, int layer) {
    const std::size_t h = static_cast<std::size_t>(s.hidden), d = s.layer_input(layer);
    T* p = base + s.layer_offset(layer);
    LayerView v;
    v.wz = p;
    v.wr = p + h * d;
    v.wh = p + 2 * h * d;
    p += 3 * h * d;
    v.uz = p;
    v.ur = p + h * h;
    v.uh = p + 2 * h * h;
    p += 3 * h * h;
    v.bz = p;
    v.br = p + h;
    v.bh = p + 2 * h;
    return v;
  }
};

struct StepCache {
  std::vector<double> h_prev, z, r, hhat, h;
};

struct ForwardCache {
  // steps[layer][l]
  std::vector<StepCache> steps[kLayers];
  // Layer-1 inputs after the layer-0 dropout mask.
  std::vector<std::vector<double>> masked_h0;
  std::vector<double> head_in;
  std::vector<double> probs;
  DropoutMasks masks;
  bool has_masks = false;
};

// y = W x for W (rows x cols), accumulated into y.
inline void matvec_add(const double* w, const double* x, std::size_t rows, std::size_t cols, double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = w + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

// x += W^T y
inline void matvec_t_add(const double* w, const double* y, std::size_t rows, std::size_t cols, double* x) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = w + i * cols;
    const double yi = y[i];
    if (yi == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) x[j] += row[j] * yi;
  }
}

// G += y x^T
inline void outer_add(double* g, const double* y, const double* x, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    double* row = g + i * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += yi * x[j];
  }
}

// One GRU step. Exactly one of `dense_in` (width d) or `onehot` (index < d) is used.
inline void gru_step(const LayerView<const double>& p, std::size_t h, std::size_t d, const double* dense_in,
                     int onehot, const std::vector<double>& h_prev, StepCache& out) {
  out.h_prev = h_prev;
  std::vector<double> az(p.bz, p.bz + h), ar(p.br, p.br + h), ah(p.bh, p.bh + h);
  if (dense_in != nullptr) {
    matvec_add(p.wz, dense_in, h, d, az.data());
    matvec_add(p.wr, dense_in, h, d, ar.data());
    matvec_add(p.wh, dense_in, h, d, ah.data());
  } else {
    const std::size_t c = static_cast<std::size_t>(onehot);
    for (std::size_t i = 0; i < h; ++i) {
      az[i] += p.wz[i * d + c];
      ar[i] += p.wr[i * d + c];
      ah[i] += p.wh[i * d + c];
    }
  }
  matvec_add(p.uz, h_prev.data(), h, h, az.data());
  matvec_add(p.ur, h_prev.data(), h, h, ar.data());
  out.z.resize(h);
  out.r.resize(h);
  std::vector<double> rh(h);
  for (std::size_t i = 0; i < h; ++i) {
    out.z[i] = sigmoid(az[i]);
    out.r[i] = sigmoid(ar[i]);
    rh[i] = out.r[i] * h_prev[i];
  }
  matvec_add(p.uh, rh.data(), h, h, ah.data());
  out.hhat.resize(h);
  out.h.resize(h);
  for (std::size_t i = 0; i < h; ++i) {
    out.hhat[i] = std::tanh(ah[i]);
    out.h[i] = (1.0 - out.z[i]) * h_prev[i] + out.z[i] * out.hhat[i];
  }
}

inline void check_shots(const EstimatorShape& s, const ShotBatch& shots) {
  if (shots.outcomes.empty()) throw ConfigError("estimator needs at least one shot");
  for (auto o : shots.outcomes) {
    if (o >= static_cast<std::uint32_t>(s.input_dim)) {
      throw ConfigError("shot outcome exceeds estimator input dimension");
    }
  }
}

// Raw softmax output; fills the cache when given.
inline std::vector<double> forward_raw(const EstimatorParams& w, const ShotBatch& shots, const DropoutMasks* masks,
                                       ForwardCache* cache) {
  const auto& s = w.shape();
  check_shots(s, shots);
  const std::size_t h = static_cast<std::size_t>(s.hidden), m = static_cast<std::size_t>(s.output);
  const std::size_t steps = shots.size();
  const auto l0 = LayerView<const double>::at(w.flat().data(), s, 0);
  const auto l1 = LayerView<const double>::at(w.flat().data(), s, 1);

  ForwardCache local;
  ForwardCache& c = cache != nullptr ? *cache : local;
  c.steps[0].assign(steps, {});
  c.steps[1].assign(steps, {});
  c.masked_h0.assign(steps, {});
  c.has_masks = masks != nullptr;
  if (masks != nullptr) c.masks = *masks;

  std::vector<double> h0(h, 0.0), h1(h, 0.0);
  for (std::size_t l = 0; l < steps; ++l) {
    gru_step(l0, h, s.layer_input(0), nullptr, static_cast<int>(shots.outcomes[l]), h0, c.steps[0][l]);
    h0 = c.steps[0][l].h;
    auto& in1 = c.masked_h0[l];
    in1 = h0;
    if (masks != nullptr) {
      for (std::size_t i = 0; i < h; ++i) in1[i] *= masks->layer0[i];
    }
    gru_step(l1, h, h, in1.data(), -1, h1, c.steps[1][l]);
    h1 = c.steps[1][l].h;
  }
  c.head_in = h1;
  if (masks != nullptr) {
    for (std::size_t i = 0; i < h; ++i) c.head_in[i] *= masks->layer1[i];
  }
  const double* v = w.flat().data() + s.head_offset();
  std::vector<double> logits(v + m * h, v + m * h + m);
  matvec_add(v, c.head_in.data(), m, h, logits.data());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (auto& lg : logits) z += (lg = std::exp(lg - mx));
  for (auto& lg : logits) lg /= z;
  c.probs = logits;
  return logits;
}

// Gradient of -log p(label) w.r.t. the flat parameters, from a filled cache.
inline std::vector<double> backward(const EstimatorParams& w, const ShotBatch& shots, int label,
                                    const ForwardCache& c) {
  const auto& s = w.shape();
  const std::size_t h = static_cast<std::size_t>(s.hidden), m = static_cast<std::size_t>(s.output);
  const std::size_t steps = shots.size();
  std::vector<double> grad(s.param_count(), 0.0);
  const auto p0 = LayerView<const double>::at(w.flat().data(), s, 0);
  const auto p1 = LayerView<const double>::at(w.flat().data(), s, 1);
  auto g0 = LayerView<double>::at(grad.data(), s, 0);
  auto g1 = LayerView<double>::at(grad.data(), s, 1);

  std::vector<double> dlogits = c.probs;
  dlogits[static_cast<std::size_t>(label)] -= 1.0;
  const double* v = w.flat().data() + s.head_offset();
  double* gv = grad.data() + s.head_offset();
  outer_add(gv, dlogits.data(), c.head_in.data(), m, h);
  for (std::size_t k = 0; k < m; ++k) gv[m * h + k] += dlogits[k];

  std::vector<double> dh1(h, 0.0);
  matvec_t_add(v, dlogits.data(), m, h, dh1.data());
  if (c.has_masks) {
    for (std::size_t i = 0; i < h; ++i) dh1[i] *= c.masks.layer1[i];
  }

  // Gradient flowing into each layer-0 output from layer 1, per time step.
  std::vector<std::vector<double>> dh0_from_above(steps, std::vector<double>(h, 0.0));

  auto gate_backward = [h](const LayerView<const double>& p, LayerView<double>& g, const StepCache& sc,
                           const double* dense_in, int onehot, std::size_t d, std::vector<double>& dh,
                           double* dx) {
    std::vector<double> dah(h), daz(h), dar(h), dprev(h), drh(h, 0.0), rh(h);
    for (std::size_t i = 0; i < h; ++i) {
      const double dhhat = dh[i] * sc.z[i];
      const double dz = dh[i] * (sc.hhat[i] - sc.h_prev[i]);
      dprev[i] = dh[i] * (1.0 - sc.z[i]);
      dah[i] = dhhat * (1.0 - sc.hhat[i] * sc.hhat[i]);
      daz[i] = dz * sc.z[i] * (1.0 - sc.z[i]);
      rh[i] = sc.r[i] * sc.h_prev[i];
    }
    matvec_t_add(p.uh, dah.data(), h, h, drh.data());
    for (std::size_t i = 0; i < h; ++i) {
      dar[i] = drh[i] * sc.h_prev[i] * sc.r[i] * (1.0 - sc.r[i]);
      dprev[i] += drh[i] * sc.r[i];
    }
    outer_add(g.uh, dah.data(), rh.data(), h, h);
    outer_add(g.uz, daz.data(), sc.h_prev.data(), h, h);
    outer_add(g.ur, dar.data(), sc.h_prev.data(), h, h);
    matvec_t_add(p.uz, daz.data(), h, h, dprev.data());
    matvec_t_add(p.ur, dar.data(), h, h, dprev.data());
    for (std::size_t i = 0; i < h; ++i) {
      g.bz[i] += daz[i];
      g.br[i] += dar[i];
      g.bh[i] += dah[i];
    }
    if (dense_in != nullptr) {
      outer_add(g.wz, daz.data(), dense_in, h, d);
      outer_add(g.wr, dar.data(), dense_in, h, d);
      outer_add(g.wh, dah.data(), dense_in, h, d);
      matvec_t_add(p.wz, daz.data(), h, d, dx);
      matvec_t_add(p.wr, dar.data(), h, d, dx);
      matvec_t_add(p.wh, dah.data(), h, d, dx);
    } else {
      const std::size_t col = static_cast<std::size_t>(onehot);
      for (std::size_t i = 0; i < h; ++i) {
        g.wz[i * d + col] += daz[i];
        g.wr[i * d + col] += dar[i];
        g.wh[i * d + col] += dah[i];
      }
    }
    dh = std::move(dprev);
  };

  for (std::size_t l = steps; l-- > 0;) {
    gate_backward(p1, g1, c.steps[1][l], c.masked_h0[l].data(), -1, h, dh1, dh0_from_above[l].data());
    if (c.has_masks) {
      for (std::size_t i = 0; i < h; ++i) dh0_from_above[l][i] *= c.masks.layer0[i];
    }
  }
  std::vector<double> dh0(h, 0.0);
  for (std::size_t l = steps; l-- > 0;) {
    for (std::size_t i = 0; i < h; ++i) dh0[i] += dh0_from_above[l][i];
    gate_backward(p0, g0, c.steps[0][l], nullptr, static_cast<int>(shots.outcomes[l]), s.layer_input(0), dh0,
                  nullptr);
  }
  return grad;
}

}  // namespace detail

// Floor at kProbFloor, then renormalize.
inline std::vector<double> floor_posterior(std::vector<double> p) {
  double sum = 0.0;
  for (auto& v : p) sum += (v = std::max(v, kProbFloor));
  for (auto& v : p) v /= sum;
  return p;
}

// Deterministic posterior (no dropout).
inline std::vector<double> forward(const EstimatorParams& w, const ShotBatch& shots) {
  return floor_posterior(detail::forward_raw(w, shots, nullptr, nullptr));
}

inline std::vector<double> forward(const EstimatorParams& w, const ShotBatch& shots, const DropoutMasks& masks) {
  return floor_posterior(detail::forward_raw(w, shots, &masks, nullptr));
}

inline double score_from_posterior(std::span<const double> posterior, int x_index) {
  if (x_index < 0 || static_cast<std::size_t>(x_index) >= posterior.size()) {
    throw IndexError("grid index out of range");
  }
  return -std::log(std::max(posterior[static_cast<std::size_t>(x_index)], kProbFloor));
}

// C(s, x) = -log p_w(x | s)
inline double score(const EstimatorParams& w, const ShotBatch& shots, int x_index) {
  return score_from_posterior(forward(w, shots), x_index);
}

inline std::vector<double> scores_from_posterior(std::span<const double> posterior) {
  std::vector<double> out(posterior.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -std::log(std::max(posterior[i], kProbFloor));
  return out;
}

// -log p(label) + (l2 / 2) ||w||^2 on the raw softmax.
inline double objective(const EstimatorParams& w, const ShotBatch& shots, int label, double l2,
                        const DropoutMasks* masks = nullptr) {
  const auto p = detail::forward_raw(w, shots, masks, nullptr);
  double sq = 0.0;
  for (double v : w.flat()) sq += v * v;
  return -std::log(p[static_cast<std::size_t>(label)]) + 0.5 * l2 * sq;
}

// Analytic gradient of objective().
inline std::vector<double> objective_grad(const EstimatorParams& w, const ShotBatch& shots, int label, double l2,
                                          const DropoutMasks* masks = nullptr) {
  if (label < 0 || label >= w.shape().output) throw IndexError("label out of range");
  detail::ForwardCache cache;
  detail::forward_raw(w, shots, masks, &cache);
  auto g = detail::backward(w, shots, label, cache);
  const auto flat = w.flat();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += l2 * flat[i];
  return g;
}

struct TrainStatus {
  bool applied = true;
  double loss = 0.0;  // cross-entropy before the step
};

// One SGD step on the cross-entropy of `label` with learning rate lr_at(t).
// Dropout masks are drawn from `rng` when cfg.dropout > 0. A non-finite
// gradient leaves w untouched and reports applied = false.
inline TrainStatus train_step(EstimatorParams& w, const ShotBatch& shots, int label, const TrainConfig& cfg, int t,
                              Rng* rng = nullptr) {
  if (label < 0 || label >= w.shape().output) throw IndexError("label out of range");
  std::optional<DropoutMasks> masks;
  if (cfg.dropout > 0.0) {
    if (rng == nullptr) throw ConfigError("dropout training needs a generator");
    masks = DropoutMasks::sample(w.shape().hidden, cfg.dropout, *rng);
  }
  detail::ForwardCache cache;
  const auto p = detail::forward_raw(w, shots, masks ? &*masks : nullptr, &cache);
  TrainStatus status;
  status.loss = -std::log(std::max(p[static_cast<std::size_t>(label)], std::numeric_limits<double>::min()));
  const double lr = cfg.lr_at(t);
  if (lr == 0.0) return status;
  auto g = detail::backward(w, shots, label, cache);
  auto flat = w.flat();
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] += cfg.l2 * flat[i];
    if (!std::isfinite(g[i])) {
      status.applied = false;
      return status;
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) flat[i] -= lr * g[i];
  return status;
}

struct LabeledShots {
  ShotBatch shots;
  int x_index = 0;
};

// Full sweeps over `data` in order; the learning rate is not decayed.
inline EstimatorParams pretrain(EstimatorParams w, std::span<const LabeledShots> data, const TrainConfig& cfg,
                                int epochs, Rng* rng = nullptr) {
  if (data.empty()) throw ConfigError("pretraining dataset is empty");
  for (int e = 0; e < epochs; ++e) {
    for (const auto& sample : data) train_step(w, sample.shots, sample.x_index, cfg, 0, rng);
  }
  return w;
}

inline double mean_cross_entropy(const EstimatorParams& w, std::span<const LabeledShots> data) {
  double acc = 0.0;
  for (const auto& sample : data) acc += score(w, sample.shots, sample.x_index);
  return acc / static_cast<double>(data.size());
}

inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

// Point, ensemble or MC-dropout estimator behind one interface. The posterior
// is the arithmetic mean over members (ensemble) or stochastic passes
// (dropout), floored and renormalized.
class BayesianEstimator {
 public:
  enum class Variant { point, ensemble, dropout };

  BayesianEstimator(Variant variant, std::vector<EstimatorParams> members, TrainConfig cfg)
      : variant_(variant), members_(std::move(members)), cfg_(cfg) {
    cfg_.validate();
    if (members_.empty()) throw ConfigError("estimator ensemble is empty");
    if (variant_ != Variant::ensemble && members_.size() != 1) {
      throw ConfigError("point and dropout estimators hold exactly one member");
    }
    if (variant_ == Variant::dropout && !(cfg_.dropout > 0.0)) {
      throw ConfigError("dropout estimator needs a dropout rate > 0");
    }
    if (variant_ != Variant::dropout) cfg_.dropout = 0.0;
  }

  Variant variant() const { return variant_; }
  const TrainConfig& config() const { return cfg_; }
  std::span<const EstimatorParams> members() const { return members_; }
  std::span<EstimatorParams> members() { return members_; }

  std::vector<double> posterior(const ShotBatch& shots, Rng& rng) const {
    return forward_bayesian(members_, shots, variant_ == Variant::dropout ? cfg_.dropout : 0.0,
                            variant_ == Variant::dropout ? cfg_.dropout_passes : 1, rng);
  }

  // Returns false if any member skipped its step.
  bool train(const ShotBatch& shots, int label, int t, Rng& rng) {
    bool ok = true;
    for (auto& m : members_) ok = train_step(m, shots, label, cfg_, t, &rng).applied && ok;
    return ok;
  }

  // Mean of member / pass posteriors. With dropout_rate == 0 each member is
  // evaluated once and `passes` is ignored.
  static std::vector<double> forward_bayesian(std::span<const EstimatorParams> members, const ShotBatch& shots,
                                              double dropout_rate, int passes, Rng& rng) {
    if (members.empty()) throw ConfigError("estimator ensemble is empty");
    if (passes < 1) throw ConfigError("passes must be >= 1");
    const std::size_t m = static_cast<std::size_t>(members.front().shape().output);
    std::vector<double> mean(m, 0.0);
    int count = 0;
    for (const auto& w : members) {
      if (dropout_rate > 0.0) {
        for (int k = 0; k < passes; ++k) {
          const auto masks = DropoutMasks::sample(w.shape().hidden, dropout_rate, rng);
          const auto p = detail::forward_raw(w, shots, &masks, nullptr);
          for (std::size_t i = 0; i < m; ++i) mean[i] += p[i];
          ++count;
        }
      } else {
        const auto p = detail::forward_raw(w, shots, nullptr, nullptr);
        for (std::size_t i = 0; i < m; ++i) mean[i] += p[i];
        ++count;
      }
    }
    for (auto& v : mean) v /= count;
    return floor_posterior(std::move(mean));
  }

 private:
  Variant variant_;
  std::vector<EstimatorParams> members_;
  TrainConfig cfg_;
};

inline BayesianEstimator::Variant variant_from_name(const std::string& name) {
  if (name == "point") return BayesianEstimator::Variant::point;
  if (name == "ensemble") return BayesianEstimator::Variant::ensemble;
  if (name == "dropout") return BayesianEstimator::Variant::dropout;
  throw ConfigError("unknown estimator variant '" + name + "'");
}

inline std::string variant_name(BayesianEstimator::Variant v) {
  switch (v) {
    case BayesianEstimator::Variant::point:
      return "point";
    case BayesianEstimator::Variant::ensemble:
      return "ensemble";
    case BayesianEstimator::Variant::dropout:
      return "dropout";
  }
  return "point";
}

}  // namespace vqs::estimator

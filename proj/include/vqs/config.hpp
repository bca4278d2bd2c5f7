// Flat key = value run configuration.
//
//   # comment
//   alpha = 0.3
//   mode  = dynamic
//
// Blank lines and '#' comments are ignored; keys are the names listed in
// config_keys(). Later assignments override earlier ones. Errors carry the
// source name and 1-based line number.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vqs/engine.hpp"
#include "vqs/errors.hpp"

namespace vqs::config {

using engine::RunConfig;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
  return d;
}

inline long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'");
  return i;
}

inline int to_small_int(const std::string& key, const std::string& v) {
  const long long i = to_int(key, v);
  if (i < -1000000000LL || i > 1000000000LL) throw ConfigError("key '" + key + "' is out of range");
  return static_cast<int>(i);
}

}  // namespace detail

// Applies one assignment; throws ConfigError on unknown keys or bad values.
inline void apply(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::to_double;
  using detail::to_small_int;
  if (key == "n") cfg.n = to_small_int(key, value);
  else if (key == "layers") cfg.layers = to_small_int(key, value);
  else if (key == "M") cfg.grid_levels = to_small_int(key, value);
  else if (key == "L") cfg.shots = to_small_int(key, value);
  else if (key == "T") cfg.horizon = to_small_int(key, value);
  else if (key == "alpha") cfg.alpha = to_double(key, value);
  else if (key == "tau") cfg.tau = to_double(key, value);
  else if (key == "eta") cfg.eta = to_double(key, value);
  else if (key == "eta_theta") cfg.eta_theta = to_double(key, value);
  else if (key == "eta_schedule") cfg.schedule = conformal::schedule_kind_from_name(value);
  else if (key == "lambda1") cfg.lambda1 = value == "auto" ? std::nan("") : to_double(key, value);
  else if (key == "static_lambda_lo") cfg.static_lambda_lo = to_double(key, value);
  else if (key == "static_lambda_hi") cfg.static_lambda_hi = to_double(key, value);
  else if (key == "hidden_size") cfg.hidden = to_small_int(key, value);
  else if (key == "lr") cfg.train.lr = to_double(key, value);
  else if (key == "l2") cfg.train.l2 = to_double(key, value);
  else if (key == "lr_decay") cfg.train.decay = to_double(key, value);
  else if (key == "lr_decay_every") cfg.train.decay_every = to_small_int(key, value);
  else if (key == "dropout") cfg.train.dropout = to_double(key, value);
  else if (key == "ensemble_size") cfg.train.ensemble_size = to_small_int(key, value);
  else if (key == "dropout_passes") cfg.train.dropout_passes = to_small_int(key, value);
  else if (key == "estimator") cfg.variant = estimator::variant_from_name(value);
  else if (key == "mode") cfg.mode = engine::mode_from_name(value);
  else if (key == "loss") cfg.loss = conformal::loss_kind_from_name(value);
  else if (key == "target") cfg.target = engine::target_from_name(value);
  else if (key == "drift_period") cfg.drift_period = to_small_int(key, value);
  else if (key == "basis") {
    probe::MeasurementBasis::from_name(value);
    cfg.basis = value;
  } else if (key == "seed") {
    const long long s = detail::to_int(key, value);
    if (s < 0) throw ConfigError("seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "trials") cfg.trials = to_small_int(key, value);
  else if (key == "pretrain_samples") cfg.pretrain_samples = to_small_int(key, value);
  else if (key == "pretrain_epochs") cfg.pretrain_epochs = to_small_int(key, value);
  else if (key == "probe_pretrain_steps") cfg.probe_pretrain_steps = to_small_int(key, value);
  else throw ConfigError("unknown key '" + key + "'");
}

struct ParsedConfig {
  RunConfig config;
  std::set<std::string> assigned;  // keys explicitly set by the file
};

inline ParsedConfig parse_text(const std::string& text, const std::string& source, RunConfig base = {}) {
  ParsedConfig out{std::move(base), {}};
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    try {
      apply(out.config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
    out.assigned.insert(key);
  }
  return out;
}

inline ParsedConfig load_file(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path, std::move(base));
}

inline std::vector<std::pair<std::string, std::string>> entries(const RunConfig& c);

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : entries(RunConfig{})) keys.push_back(e.first);
  return keys;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "auto";
  // shortest text that round-trips
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// Every key with its resolved value, in config_keys() order.
inline std::vector<std::pair<std::string, std::string>> entries(const RunConfig& c) {
  const auto d = format_double;
  const auto i = [](auto v) { return std::to_string(v); };
  return {{"n", i(c.n)},
          {"layers", i(c.layers)},
          {"M", i(c.grid_levels)},
          {"L", i(c.shots)},
          {"T", i(c.horizon)},
          {"alpha", d(c.alpha)},
          {"tau", d(c.tau)},
          {"eta", d(c.eta)},
          {"eta_theta", d(c.eta_theta)},
          {"eta_schedule", conformal::schedule_kind_name(c.schedule)},
          {"lambda1", d(c.lambda1)},
          {"static_lambda_lo", d(c.static_lambda_lo)},
          {"static_lambda_hi", d(c.static_lambda_hi)},
          {"hidden_size", i(c.hidden)},
          {"lr", d(c.train.lr)},
          {"l2", d(c.train.l2)},
          {"lr_decay", d(c.train.decay)},
          {"lr_decay_every", i(c.train.decay_every)},
          {"dropout", d(c.train.dropout)},
          {"ensemble_size", i(c.train.ensemble_size)},
          {"dropout_passes", i(c.train.dropout_passes)},
          {"estimator", estimator::variant_name(c.variant)},
          {"mode", engine::mode_name(c.mode)},
          {"loss", conformal::loss_kind_name(c.loss)},
          {"target", engine::target_name(c.target)},
          {"drift_period", i(c.drift_period)},
          {"basis", c.basis},
          {"seed", i(c.seed)},
          {"trials", i(c.trials)},
          {"pretrain_samples", i(c.pretrain_samples)},
          {"pretrain_epochs", i(c.pretrain_epochs)},
          {"probe_pretrain_steps", i(c.probe_pretrain_steps)}};
}

// Text that parse_text() maps back to the same configuration.
inline std::string to_text(const RunConfig& c) {
  std::string out;
  for (const auto& [k, v] : entries(c)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace vqs::config

// vqs: command-line driver for the online conformal variational sensing loop.
//
//   vqs run        one benchmark mode, per-trial JSONL records + aggregate CSV
//   vqs bench      all four modes on shared seeds, joined CSV
//   vqs bayesian   dynamic run with an ensemble or MC-dropout estimator
//   vqs pretrain   θ_1 / w_1 checkpoints only
//   vqs gradcheck  gradient self-checks, nonzero exit on failure
//
// Exit codes: 0 success, 1 failed check or partial run, 2 usage/config error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vqs/config.hpp"
#include "vqs/engine.hpp"
#include "vqs/gradcheck.hpp"
#include "vqs/io.hpp"
#include "vqs/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using vqs::engine::RunConfig;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<double> alpha, eta, eta_theta, tau;
  std::optional<int> horizon, trials, hidden;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::vector<std::string> sets;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_mode) {
  cmd->add_option("--config", o.config_path, "flat key = value config file");
  cmd->add_option("--alpha", o.alpha, "target long-run loss");
  cmd->add_option("--T", o.horizon, "time steps per trial");
  cmd->add_option("--seed", o.seed, "base seed (trial i uses seed + 9973 i)");
  cmd->add_option("--trials", o.trials, "independent trials");
  cmd->add_option("--hidden-size", o.hidden, "recurrent hidden width");
  cmd->add_option("--eta", o.eta, "threshold step size");
  cmd->add_option("--eta-theta", o.eta_theta, "probe learning rate");
  cmd->add_option("--tau", o.tau, "soft set-size temperature");
  if (with_mode) cmd->add_option("--mode", o.mode, "dynamic | static | static-threshold | static-probe-estimator");
  cmd->add_option("--set", o.sets, "extra key=value override (repeatable)");
  cmd->add_option("--out-dir", o.out_dir, "output directory (default $VQS_OUTPUT_ROOT/vqs-<command>)");
}

// defaults < presets < file < flags
RunConfig resolve(const CommonOptions& o, const std::vector<std::pair<std::string, std::string>>& presets,
                  std::set<std::string>* assigned = nullptr) {
  RunConfig cfg;
  for (const auto& [k, v] : presets) vqs::config::apply(cfg, k, v);
  std::set<std::string> keys;
  if (!o.config_path.empty()) {
    if (!fs::exists(o.config_path)) throw vqs::ConfigError("config file '" + o.config_path + "' does not exist");
    auto parsed = vqs::config::load_file(o.config_path, cfg);
    cfg = parsed.config;
    keys = parsed.assigned;
  }
  if (o.alpha) cfg.alpha = *o.alpha;
  if (o.horizon) cfg.horizon = *o.horizon;
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.hidden) cfg.hidden = *o.hidden;
  if (o.eta) cfg.eta = *o.eta;
  if (o.eta_theta) cfg.eta_theta = *o.eta_theta;
  if (o.tau) cfg.tau = *o.tau;
  if (o.mode) cfg.mode = vqs::engine::mode_from_name(*o.mode);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw vqs::ConfigError("--set expects key=value, got '" + kv + "'");
    const auto key = vqs::config::detail::trim(kv.substr(0, eq));
    vqs::config::apply(cfg, key, vqs::config::detail::trim(kv.substr(eq + 1)));
    keys.insert(key);
  }
  cfg.validate();
  if (assigned != nullptr) *assigned = keys;
  return cfg;
}

fs::path output_dir(const CommonOptions& o, const std::string& command) {
  if (!o.out_dir.empty()) return o.out_dir;
  const char* root = std::getenv("VQS_OUTPUT_ROOT");
  return fs::path(root != nullptr && *root != '\0' ? root : ".") / ("vqs-" + command);
}

// ISO-8601 UTC; SOURCE_DATE_EPOCH pins it for reproducible manifests.
std::string timestamp() {
  std::time_t now = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json config_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : vqs::config::entries(cfg)) j[k] = v;
  return j;
}

json decisions(const RunConfig& cfg) {
  return {{"measurement_basis", cfg.basis},
          {"ansatz", "shared Rz*Ry*Rz + shared ZZ ring"},
          {"estimator_cell", "gru"},
          {"estimator_variant", vqs::estimator::variant_name(cfg.variant)},
          {"dropout_passes_per_forward",
           cfg.variant == vqs::estimator::BayesianEstimator::Variant::dropout ? json(cfg.train.dropout_passes)
                                                                              : json(nullptr)},
          {"threshold_schedule", vqs::conformal::schedule_kind_name(cfg.schedule)},
          {"probe_gradient", "score-function with running-mean baseline; central differences h=1e-5"},
          {"update_order", "lambda, w, theta"},
          {"target_process", vqs::engine::target_name(cfg.target)},
          {"trial_seed_rule", "seed + 9973 * trial"}};
}

class Manifest {
 public:
  Manifest(fs::path dir, std::string command, const RunConfig& cfg) : dir_(std::move(dir)) {
    j_ = {{"tool", "vqs"},
          {"version", vqs::kVersion},
          {"command", std::move(command)},
          {"seed", cfg.seed},
          {"config", config_json(cfg)},
          {"decisions", decisions(cfg)},
          {"started_at", timestamp()},
          {"finished_at", nullptr},
          {"status", "running"},
          {"outputs", json::array()}};
  }

  json& data() { return j_; }

  void add_output(const fs::path& path) {
    outputs_.push_back(path);
  }

  // Written once before any record and again when the command finishes.
  void write() const { vqs::io::write_text(dir_ / "manifest.json", j_.dump(2) + "\n"); }

  void finish(const std::string& status) {
    j_["status"] = status;
    j_["finished_at"] = timestamp();
    json outs = json::array();
    for (const auto& p : outputs_) {
      outs.push_back({{"path", fs::relative(p, dir_).generic_string()}, {"sha256", vqs::io::sha256_file(p)}});
    }
    j_["outputs"] = outs;
    write();
  }

 private:
  fs::path dir_;
  json j_;
  std::vector<fs::path> outputs_;
};

fs::path write_file(Manifest& m, const fs::path& path, const std::string& text) {
  vqs::io::write_text(path, text);
  m.add_output(path);
  return path;
}

void write_experiment(Manifest& m, const fs::path& dir, const std::string& mode_label,
                      const vqs::engine::ExperimentResult& res, json& trials_out) {
  for (std::size_t i = 0; i < res.trials.size(); ++i) {
    std::ostringstream os;
    vqs::io::write_records(os, res.trials[i].records);
    write_file(m, dir / ("trial_" + std::to_string(i) + ".jsonl"), os.str());
    trials_out[mode_label].push_back(vqs::io::trial_summary(res.trials[i]));
  }
}

int cmd_run_like(const CommonOptions& o, const std::string& command, const RunConfig& cfg) {
  const auto dir = output_dir(o, command);
  fs::create_directories(dir);
  Manifest m(dir, command, cfg);
  m.write();
  write_file(m, dir / "config.resolved", vqs::config::to_text(cfg));

  const auto res = vqs::engine::run_experiment(cfg);
  const auto mode = vqs::engine::mode_name(cfg.mode);
  json trials = json::object();
  trials[mode] = json::array();
  write_experiment(m, dir / "records", mode, res, trials);
  write_file(m, dir / "trials.json", trials.dump(2) + "\n");
  std::ostringstream csv;
  csv << vqs::io::kAggregateHeader << '\n';
  vqs::io::write_aggregate_rows(csv, mode, res.aggregate);
  write_file(m, dir / "aggregate.csv", csv.str());

  if (res.partial) {
    m.data()["partial"] = true;
    m.data()["error"] = res.error;
    m.finish("partial");
    std::cerr << "error: " << res.error << " (partial results in " << dir.string() << ")\n";
    return 1;
  }
  m.data()["partial"] = false;
  m.finish("complete");
  if (!res.aggregate.empty()) {
    const auto& last = res.aggregate.back();
    std::cout << command << " mode=" << mode << " T=" << last.t << " mean_coverage=" << last.mean_coverage
              << " mean_avg_set_size=" << last.mean_avg_set_size << "\n";
  }
  std::cout << "artifacts: " << dir.string() << "\n";
  return 0;
}

int cmd_bench(const CommonOptions& o, const RunConfig& base) {
  const auto dir = output_dir(o, "bench");
  fs::create_directories(dir);
  Manifest m(dir, "bench", base);
  m.data()["modes"] = {"dynamic", "static", "static-threshold", "static-probe-estimator"};
  m.write();
  write_file(m, dir / "config.resolved", vqs::config::to_text(base));

  std::ostringstream csv;
  csv << vqs::io::kAggregateHeader << '\n';
  json trials = json::object();
  bool partial = false;
  std::string error;
  for (auto mode : {vqs::engine::BenchmarkMode::dynamic, vqs::engine::BenchmarkMode::static_all,
                    vqs::engine::BenchmarkMode::static_threshold, vqs::engine::BenchmarkMode::static_probe_estimator}) {
    auto cfg = base;
    cfg.mode = mode;
    const auto name = vqs::engine::mode_name(mode);
    const auto res = vqs::engine::run_experiment(cfg);
    trials[name] = json::array();
    write_experiment(m, dir / "records" / name, name, res, trials);
    vqs::io::write_aggregate_rows(csv, name, res.aggregate);
    if (!res.aggregate.empty()) {
      const auto& last = res.aggregate.back();
      std::cout << name << ": mean_coverage=" << last.mean_coverage << " mean_avg_set_size=" << last.mean_avg_set_size
                << "\n";
    }
    if (res.partial) {
      partial = true;
      error = name + ": " + res.error;
      break;
    }
  }
  write_file(m, dir / "trials.json", trials.dump(2) + "\n");
  write_file(m, dir / "bench.csv", csv.str());
  m.data()["partial"] = partial;
  if (partial) m.data()["error"] = error;
  m.finish(partial ? "partial" : "complete");
  std::cout << "artifacts: " << dir.string() << "\n";
  if (partial) std::cerr << "error: " << error << "\n";
  return partial ? 1 : 0;
}

int cmd_pretrain(const CommonOptions& o, const RunConfig& cfg) {
  const auto dir = output_dir(o, "pretrain");
  fs::create_directories(dir);
  Manifest m(dir, "pretrain", cfg);
  m.write();
  write_file(m, dir / "config.resolved", vqs::config::to_text(cfg));
  json summary = json::array();
  for (int i = 0; i < cfg.trials; ++i) {
    const auto seed = vqs::engine::trial_seed(cfg.seed, i);
    const auto pre = vqs::engine::pretrain_run(cfg, seed);
    const std::string stem = "trial_" + std::to_string(i);
    std::ostringstream theta;
    vqs::io::write_probe(theta, pre.theta);
    write_file(m, dir / "checkpoints" / (stem + "_theta.ckpt"), theta.str());
    for (std::size_t k = 0; k < pre.members.size(); ++k) {
      std::ostringstream w;
      vqs::io::write_estimator(w, pre.members[k]);
      write_file(m, dir / "checkpoints" / (stem + "_estimator_" + std::to_string(k) + ".ckpt"), w.str());
    }
    summary.push_back({{"trial", i},
                       {"seed", seed},
                       {"cross_entropy_before", pre.cross_entropy_before},
                       {"cross_entropy_after", pre.cross_entropy_after},
                       {"probe_soft_sizes", pre.probe_soft_sizes}});
    std::cout << stem << ": cross-entropy " << pre.cross_entropy_before << " -> " << pre.cross_entropy_after << "\n";
  }
  write_file(m, dir / "pretrain.json", summary.dump(2) + "\n");
  m.finish("complete");
  std::cout << "artifacts: " << dir.string() << "\n";
  return 0;
}

int cmd_gradcheck(const CommonOptions& o, std::uint64_t seed, bool corrupt) {
  RunConfig cfg;
  cfg.seed = seed;
  const auto dir = output_dir(o, "gradcheck");
  fs::create_directories(dir);
  Manifest m(dir, "gradcheck", cfg);
  m.data()["corrupted_gradient"] = corrupt;
  m.write();

  vqs::gradcheck::Options opt;
  opt.seed = seed;
  if (corrupt) opt.corrupt = 0.05;
  const auto results = vqs::gradcheck::run_all(opt);
  json report{{"seed", seed}, {"corrupted_gradient", corrupt}, {"checks", json::array()}};
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    report["checks"].push_back({{"name", r.name},
                                {"passed", r.passed},
                                {"max_error", r.max_error},
                                {"tolerance", r.tolerance},
                                {"metric", r.metric},
                                {"evaluated", r.evaluated}});
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " max_error=" << r.max_error
              << " tolerance=" << r.tolerance << " (" << r.metric << ", n=" << r.evaluated << ")\n";
  }
  report["passed"] = all;
  write_file(m, dir / "gradcheck.json", report.dump(2) + "\n");
  m.finish(all ? "complete" : "failed");
  if (!all) std::cerr << "gradcheck FAILED\n";
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online conformal risk control for variational quantum sensing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(vqs::kVersion));

  CommonOptions run_o, bench_o, bayes_o, pre_o, grad_o;
  auto* run = app.add_subcommand("run", "run one benchmark mode");
  add_common(run, run_o, true);
  auto* bench = app.add_subcommand("bench", "compare all four benchmark modes");
  add_common(bench, bench_o, false);
  auto* bayes = app.add_subcommand("bayesian", "dynamic run with a Bayesian estimator");
  add_common(bayes, bayes_o, false);
  std::string variant = "ensemble";
  bayes->add_option("--variant", variant, "ensemble | dropout")->check(CLI::IsMember({"ensemble", "dropout"}));
  auto* pre = app.add_subcommand("pretrain", "write pretrained probe and estimator checkpoints");
  add_common(pre, pre_o, false);
  auto* grad = app.add_subcommand("gradcheck", "verify every gradient against numerical oracles");
  std::uint64_t grad_seed = 7;
  bool corrupt = false;
  grad->add_option("--seed", grad_seed, "check seed");
  grad->add_option("--out-dir", grad_o.out_dir, "output directory");
  grad->add_flag("--corrupt-gradient", corrupt, "negative control: perturb analytic gradients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run_like(run_o, "run", resolve(run_o, {}));
    if (*bench) return cmd_bench(bench_o, resolve(bench_o, {}));
    if (*bayes) {
      std::vector<std::pair<std::string, std::string>> presets{{"estimator", variant}};
      if (variant == "ensemble") presets.emplace_back("ensemble_size", "5");
      if (variant == "dropout") presets.emplace_back("dropout", "0.4");
      auto cfg = resolve(bayes_o, presets);
      cfg.mode = vqs::engine::BenchmarkMode::dynamic;
      return cmd_run_like(bayes_o, "bayesian", cfg);
    }
    if (*pre) return cmd_pretrain(pre_o, resolve(pre_o, {}));
    if (*grad) return cmd_gradcheck(grad_o, grad_seed, corrupt);
  } catch (const vqs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

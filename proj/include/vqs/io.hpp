// Artifact formats.
//
// Checkpoints are text: a one-line shape header, then whitespace-separated
// decimals (17 significant digits, so values round-trip exactly).
//
//   estimator:  "vqs-estimator gru2 <input_dim> <hidden> <output> <count>"
//   probe:      "vqs-probe ring-zz <layers> <count>"
//
// Per-step records are JSON lines; aggregates are CSV with a header row.

#pragma once

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqs/engine.hpp"
#include "vqs/errors.hpp"
#include "vqs/estimator.hpp"
#include "vqs/probe.hpp"

namespace vqs::io {

using nlohmann::json;

namespace detail {

inline void write_values(std::ostream& os, std::span<const double> values) {
  os << std::setprecision(17);
  for (std::size_t i = 0; i < values.size(); ++i) os << values[i] << (i + 1 == values.size() ? '\n' : ' ');
}

inline std::vector<double> read_values(std::istream& is, std::size_t count) {
  std::vector<double> v(count);
  for (auto& x : v) {
    if (!(is >> x)) throw ConfigError("checkpoint truncated or malformed");
  }
  std::string extra;
  if (is >> extra) throw ConfigError("checkpoint has trailing data");
  return v;
}

}  // namespace detail

inline void write_estimator(std::ostream& os, const estimator::EstimatorParams& w) {
  const auto& s = w.shape();
  os << "vqs-estimator gru2 " << s.input_dim << ' ' << s.hidden << ' ' << s.output << ' ' << s.param_count() << '\n';
  detail::write_values(os, w.flat());
}

inline estimator::EstimatorParams read_estimator(std::istream& is) {
  std::string magic, cell;
  estimator::EstimatorShape s;
  std::size_t count = 0;
  if (!(is >> magic >> cell >> s.input_dim >> s.hidden >> s.output >> count) || magic != "vqs-estimator" ||
      cell != "gru2") {
    throw ConfigError("not an estimator checkpoint");
  }
  s.validate();
  if (count != s.param_count()) throw ConfigError("checkpoint count does not match its shape");
  return estimator::EstimatorParams(s, detail::read_values(is, count));
}

inline void write_probe(std::ostream& os, const probe::ProbeParams& theta) {
  os << "vqs-probe ring-zz " << theta.layers() << ' ' << theta.size() << '\n';
  detail::write_values(os, theta.flat());
}

inline probe::ProbeParams read_probe(std::istream& is) {
  std::string magic, kind;
  int layers = 0;
  std::size_t count = 0;
  if (!(is >> magic >> kind >> layers >> count) || magic != "vqs-probe" || kind != "ring-zz") {
    throw ConfigError("not a probe checkpoint");
  }
  if (layers < 1 || count != static_cast<std::size_t>(probe::ProbeParams::kPerLayer * layers)) {
    throw ConfigError("probe checkpoint count does not match its layer count");
  }
  return probe::ProbeParams(layers, detail::read_values(is, count));
}

inline json record_to_json(const engine::EpisodeRecord& r) {
  std::vector<int> members;
  for (std::size_t i = 0; i < r.set_mask.size(); ++i) {
    if (r.set_mask[i]) members.push_back(static_cast<int>(i));
  }
  return json{{"t", r.t},
              {"x_index", r.x_index},
              {"shots", r.shots.outcomes},
              {"lambda", r.lambda},
              {"scores", r.scores},
              {"set", members},
              {"set_size", r.set_size},
              {"loss", r.loss},
              {"soft_size", r.soft_size},
              {"avg_loss", r.avg_loss},
              {"avg_set_size", r.avg_set_size},
              {"flags",
               {{"skipped_shots", r.skipped_shots},
                {"theta_skipped", r.theta_skipped},
                {"w_skipped", r.w_skipped},
                {"empty_set_cap", r.empty_set_cap}}}};
}

inline void write_records(std::ostream& os, const std::vector<engine::EpisodeRecord>& records) {
  for (const auto& r : records) os << record_to_json(r).dump() << '\n';
}

inline std::string format_csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline const char* kAggregateHeader = "mode,t,mean_coverage,mean_avg_loss,mean_set_size,mean_avg_set_size,mean_lambda";

inline void write_aggregate_rows(std::ostream& os, const std::string& mode,
                                 const std::vector<engine::AggregateRow>& rows) {
  const auto f = format_csv_number;
  for (const auto& r : rows) {
    os << mode << ',' << r.t << ',' << f(r.mean_coverage) << ',' << f(r.mean_avg_loss) << ',' << f(r.mean_set_size)
       << ',' << f(r.mean_avg_set_size) << ',' << f(r.mean_lambda) << '\n';
  }
}

inline json trial_summary(const engine::TrialResult& tr) {
  json j{{"seed", tr.seed},
         {"initial_lambda", tr.initial_lambda},
         {"final_lambda", tr.final_lambda},
         {"steps", tr.records.size()},
         {"pretrain_cross_entropy_before", tr.pretrain.cross_entropy_before},
         {"pretrain_cross_entropy_after", tr.pretrain.cross_entropy_after},
         {"theta_1", std::vector<double>(tr.pretrain.theta.flat().begin(), tr.pretrain.theta.flat().end())}};
  j["static_lambda"] = std::isnan(tr.static_lambda) ? json(nullptr) : json(tr.static_lambda);
  if (!tr.records.empty()) {
    j["final_avg_loss"] = tr.records.back().avg_loss;
    j["final_avg_set_size"] = tr.records.back().avg_set_size;
  }
  return j;
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "' for checksum");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace vqs::io

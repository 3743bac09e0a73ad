// JSON (de)serialization of chain specs and experiment configs, CSV
// emission with reproducible formatting, and the stable hashes embedded
// in every output file.
#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hmmfdr/hmm.hpp"
#include "hmmfdr/models.hpp"
#include "hmmfdr/util.hpp"

namespace hmmfdr {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

namespace detail {

inline Matrix matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  Matrix m(rows, static_cast<int>(j.at(0).size()));
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < m.cols(); ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

inline json matrix_to_json(const Matrix& m) {
  json j = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    j.push_back(row);
  }
  return j;
}

}  // namespace detail

// Spec JSON: either the binary stationary shortcut {"p01":, "p10":} or the
// full form with states, h1_states, initial, transitions, kappa, phi_star.
inline HmmSpec spec_from_json(const json& j) {
  if (j.contains("p01") || j.contains("p10")) {
    if (!j.contains("p01") || !j.contains("p10"))
      throw Error("ConfigError", "binary spec needs both 'p01' and 'p10'");
    BinaryStationarySpec b(j.at("p01").get<double>(), j.at("p10").get<double>());
    const double phi = j.value("phi_star", 0.0);
    return b.to_hmm(phi);
  }
  for (const char* field : {"states", "h1_states", "initial", "transitions",
                            "kappa", "phi_star"})
    if (!j.contains(field))
      throw Error("ConfigError", std::string("spec missing field '") + field + "'");
  HmmSpec s;
  s.states = j.at("states").get<std::vector<std::string>>();
  const auto h1 = j.at("h1_states").get<std::vector<std::string>>();
  s.is_h1.assign(s.states.size(), false);
  for (const auto& lab : h1) {
    const auto it = std::find(s.states.begin(), s.states.end(), lab);
    if (it == s.states.end())
      throw Error("ConfigError", "h1_states entry '" + lab + "' not a declared state");
    s.is_h1[static_cast<std::size_t>(it - s.states.begin())] = true;
  }
  s.initial = j.at("initial").get<std::vector<double>>();
  const json& tr = j.at("transitions");
  if (tr.is_object()) {
    s.time_varying = true;
    s.tv_start = tr.value("start", 0);
    for (const auto& m : tr.at("matrices")) s.transitions.push_back(detail::matrix_from_json(m));
  } else if (tr.is_array() && tr.at(0).is_array() && tr.at(0).at(0).is_array()) {
    s.time_varying = true;
    for (const auto& m : tr) s.transitions.push_back(detail::matrix_from_json(m));
  } else {
    s.transitions.push_back(detail::matrix_from_json(tr));
  }
  s.kappa = j.at("kappa").get<int>();
  s.phi_star = j.at("phi_star").get<double>();
  return s;
}

inline json spec_to_json(const HmmSpec& s) {
  json j;
  j["states"] = s.states;
  json h1 = json::array();
  for (std::size_t i = 0; i < s.states.size(); ++i)
    if (s.is_h1[i]) h1.push_back(s.states[i]);
  j["h1_states"] = h1;
  j["initial"] = s.initial;
  if (s.time_varying) {
    json mats = json::array();
    for (const auto& m : s.transitions) mats.push_back(detail::matrix_to_json(m));
    j["transitions"] = {{"start", s.tv_start}, {"matrices", mats}};
  } else {
    j["transitions"] = detail::matrix_to_json(s.transitions[0]);
  }
  j["kappa"] = s.kappa;
  j["phi_star"] = s.phi_star;
  return j;
}

struct ExperimentConfig {
  json raw;
  HmmSpec spec;
  std::optional<BinaryStationarySpec> binary;  // set when the shortcut was used
  std::string model_name;
  int nu = 16;
  std::vector<double> epsilon_grid;
  int m = 20;
  int n = 20;
  long replicates = 1;
  std::uint64_t seed = 1;
  double alpha = 0.1;
  int truncation = 0;  // 0: derive from the chain's geometric tail
  double fd_h1 = 1e-5;
  double fd_h2 = 1e-3;
  std::vector<std::pair<int, int>> schedule;

  double epsilon0() const { return epsilon_grid.at(0); }
};

inline ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig c;
  c.raw = j;
  for (const char* field : {"spec", "model", "epsilon"})
    if (!j.contains(field))
      throw Error("ConfigError", std::string("config missing field '") + field + "'");
  c.spec = spec_from_json(j.at("spec"));
  if (j.at("spec").contains("p01"))
    c.binary = BinaryStationarySpec(j.at("spec").at("p01").get<double>(),
                                    j.at("spec").at("p10").get<double>());
  if (!j.at("model").is_string())
    throw Error("ConfigError", "field 'model' must be a string");
  c.model_name = j.at("model").get<std::string>();
  c.nu = j.value("nu", 16);
  if (j.at("epsilon").is_array())
    c.epsilon_grid = j.at("epsilon").get<std::vector<double>>();
  else if (j.at("epsilon").is_number())
    c.epsilon_grid = {j.at("epsilon").get<double>()};
  else
    throw Error("ConfigError", "field 'epsilon' must be a number or array");
  if (c.epsilon_grid.empty())
    throw Error("ConfigError", "field 'epsilon' must not be empty");
  if (j.contains("window")) {
    if (!j.at("window").contains("m") || !j.at("window").contains("n"))
      throw Error("ConfigError", "field 'window' needs 'm' and 'n'");
    c.m = j.at("window").at("m").get<int>();
    c.n = j.at("window").at("n").get<int>();
    if (c.m < 0 || c.n < 0)
      throw Error("ConfigError", "field 'window' entries must be nonnegative");
  }
  c.replicates = j.value("replicates", 1L);
  if (c.replicates < 1) throw Error("ConfigError", "field 'replicates' must be >= 1");
  c.seed = j.value("seed", static_cast<std::uint64_t>(1));
  c.alpha = j.value("alpha", 0.1);
  if (!(c.alpha > 0.0 && c.alpha < 1.0))
    throw Error("ConfigError", "field 'alpha' must lie in (0,1)");
  c.truncation = j.value("truncation", 0);
  if (j.contains("fd")) {
    c.fd_h1 = j.at("fd").value("h1", 1e-5);
    c.fd_h2 = j.at("fd").value("h2", 1e-3);
  }
  if (j.contains("schedule"))
    for (const auto& e : j.at("schedule")) {
      if (!e.is_array() || e.size() != 2)
        throw Error("ConfigError", "field 'schedule' entries must be [m, n] pairs");
      c.schedule.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
  return c;
}

inline std::shared_ptr<const InteractionModel> make_model(const ExperimentConfig& c) {
  if (c.model_name == "translation_gaussian") return translation_model(gaussian_potential());
  if (c.model_name == "scaling_gaussian") return scaling_model(gaussian_potential());
  if (c.model_name == "t_statistic") return t_statistic_model(c.nu);
  throw Error("ConfigError", "unknown model '" + c.model_name + "'");
}

inline std::string config_hash(const ExperimentConfig& c) {
  return fnv1a64_hex(c.raw.dump());
}

inline std::string spec_hash(const HmmSpec& s) {
  return fnv1a64_hex(spec_to_json(s).dump());
}

// CSV writer: header row, UTF-8, LF endings, 17-significant-digit floats.
// A nonempty preamble goes first as a single '#' comment line, which is how
// run artifacts carry their config hash, seed, and version.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header,
            const std::string& preamble = "")
      : out_(path, std::ios::binary) {
    if (!out_) throw Error("IoError", "cannot open " + path);
    if (!preamble.empty()) out_ << "# " << preamble << '\n';
    write_strings(header);
  }

  CsvWriter& field(double v) {
    cells_.push_back(format_double(v));
    return *this;
  }
  CsvWriter& field(long v) {
    cells_.push_back(std::to_string(v));
    return *this;
  }
  CsvWriter& field(int v) {
    cells_.push_back(std::to_string(v));
    return *this;
  }
  CsvWriter& field(const std::string& v) {
    cells_.push_back(v);
    return *this;
  }
  void end_row() {
    write_strings(cells_);
    cells_.clear();
  }

 private:
  void write_strings(const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out_ << ',';
      out_ << row[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::vector<std::string> cells_;
};

inline std::string csv_preamble(const ExperimentConfig& c) {
  return "config_hash=" + config_hash(c) + " seed=" + std::to_string(c.seed) +
         " version=" + kVersion;
}

// Run metadata attached to every artifact; records the two conventions a
// reader needs to reproduce the chain law.
inline json run_metadata(const ExperimentConfig& c, double epsilon) {
  json meta;
  meta["version"] = kVersion;
  meta["config_hash"] = config_hash(c);
  meta["spec_hash"] = spec_hash(c.spec);
  meta["model"] = c.model_name;
  if (c.model_name == "t_statistic") meta["nu"] = c.nu;
  meta["epsilon"] = epsilon;
  meta["window"] = {{"m", c.m}, {"n", c.n}};
  meta["seed"] = c.seed;
  meta["conventions"] = {
      {"initial_law_anchor", "window_left_edge"},
      {"transitions_outside_stored_window", "nearest_matrix"},
  };
  return meta;
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot open " + path);
  out << j.dump(2) << '\n';
}

}  // namespace hmmfdr

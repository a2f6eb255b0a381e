#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "roughvol/experiments.hpp"
#include "roughvol/model.hpp"
#include "roughvol/pricing.hpp"
#include "roughvol/simulate.hpp"

namespace roughvol::cli {

struct ModelSection {
  double hurst = 0.3;
  double eps = 0.05;
  double rho = -0.5;
  double x0 = 100.0;
  double maturity = 1.0;
  bool operator==(const ModelSection&) const = default;
};

struct VolSection {
  std::string family = "sigmoid";  // sigmoid | constant | table | exponential
  double sigma_min = 0.15;
  double sigma_max = 0.3;
  double slope = 3.0;
  double center = 0.5;
  double level = 0.2;               // constant
  std::vector<double> table_z;      // table
  std::vector<double> table_sigma;
  double scale = 0.2;               // exponential
  double exp_slope = 0.5;
  bool allow_unbounded = false;
  bool operator==(const VolSection&) const = default;
};

struct GridSection {
  double dt_over_eps = 0.125;
  double warmup_over_eps = 30.0;
  int exact_cells = 16;
  std::string scheme = "truncated_moving_average";  // or cholesky_exact
  bool operator==(const GridSection&) const = default;
};

struct PayoffSection {
  std::string kind = "ramp";  // call | ramp
  double strike = 100.0;
  double k1 = 100.0;
  double k2 = 130.0;
  double width = 0.05;
  bool operator==(const PayoffSection&) const = default;
};

struct MCSection {
  long paths = 200000;
  std::uint64_t seed = 20240601;
  bool antithetic = true;
  bool control_variates = true;
  double dt_over_eps = 0.0625;
  double warmup_over_eps = 20.0;
  int exact_cells = 2;
  std::string variant = "stationary";  // stationary | riemann_liouville
  double z0 = 0.0;
  double t = 0.0;  // evaluation time of the asymptotic price
  bool operator==(const MCSection&) const = default;
};

struct StudySection {
  std::vector<double> eps_grid{0.1, 0.05, 0.025, 0.0125};
  long lemma_paths = 20000;
  double vartheta_eps = 0.01;
  std::vector<double> phi_eps_grid{0.004, 0.002, 0.001, 0.0005};
  std::vector<double> kappa_eps_grid{0.1, 0.05, 0.025, 0.0125};
  double smile_eps = 0.0125;
  double smile_log_moneyness = 0.05;  // strikes span x0 exp(+-this)
  int smile_points = 11;
  std::string ts_regime = "fast";
  double ts_tau_mr = 1.0;
  double ts_delta_sigma = 0.01;
  double ts_tau_bar = 0.0;  // 0: use 2 / sigma_bar^2
  double ts_tau_min = 1e-4;
  double ts_tau_max = 1e4;
  int ts_points = 41;
  bool operator==(const StudySection&) const = default;
};

struct SimulateSection {
  int dump_paths = 4;
  bool operator==(const SimulateSection&) const = default;
};

struct OutputSection {
  std::string dir = "roughvol_out";
  std::vector<std::string> formats{"csv", "json", "txt"};
  bool operator==(const OutputSection&) const = default;
};

struct RunConfig {
  ModelSection model;
  VolSection vol;
  GridSection grid;
  PayoffSection payoff;
  MCSection mc;
  StudySection study;
  SimulateSection simulate;
  OutputSection output;
  bool operator==(const RunConfig&) const = default;

  /// Re-runs every library-level validation; throws ConfigError naming the
  /// offending "section.key".
  void validate() const;

  ModelParams model_params() const;
  ModelParams model_params(double eps) const;
  VolFunction vol_function() const;
  SimGrid sim_grid(const ModelParams& mp) const;
  Payoff make_payoff() const;
  MCOptions mc_options() const;
  bool wants(const std::string& format) const;
};

/// Parses the sectioned key-value text. Unknown sections or keys, duplicate
/// keys and malformed values throw ConfigError.
RunConfig parse_config(const std::string& text);
/// Reads the key-value form, or a JSON sidecar when the path ends in ".json".
RunConfig load_config(const std::string& path);

nlohmann::ordered_json to_json(const RunConfig& c);
/// Inverse of to_json; rejects unknown keys like the text form.
RunConfig from_json(const nlohmann::json& j);

/// JSON sidecar {"header": {..., "config_hash"}, "config": {...}} as written
/// next to every output. A header hash that does not match the config is a
/// ConfigError. Extra top-level keys listed in `allowed_extra` are ignored.
nlohmann::ordered_json make_sidecar(const RunConfig& c);
RunConfig from_sidecar(const nlohmann::json& j,
                       const std::vector<std::string>& allowed_extra = {"paths"});

/// Sectioned key-value text that parse_config maps back to `c`.
std::string to_ini(const RunConfig& c);

/// FNV-1a 64 of the compact canonical JSON without the output section, as
/// 16 hex digits.
std::string config_hash(const RunConfig& c);

/// Documented defaults, one line per key, for --help.
std::string defaults_help();

}  // namespace roughvol::cli

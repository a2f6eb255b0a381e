#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "roughvol/error.hpp"

namespace roughvol::cli {

namespace {

// Calls v(section, key, field, doc) for every configurable field, in the
// canonical order used by the JSON form and the hash.
template <class C, class V>
void visit(C& c, V&& v) {
  v("model", "hurst", c.model.hurst, "Hurst exponent, 0 < H < 1/2");
  v("model", "eps", c.model.eps, "mean-reversion time scale (years)");
  v("model", "rho", c.model.rho, "leverage correlation in [-1, 1]");
  v("model", "x0", c.model.x0, "spot");
  v("model", "maturity", c.model.maturity, "maturity T (years)");

  v("vol", "family", c.vol.family, "sigmoid | constant | table | exponential");
  v("vol", "sigma_min", c.vol.sigma_min, "sigmoid lower level");
  v("vol", "sigma_max", c.vol.sigma_max, "sigmoid upper level");
  v("vol", "slope", c.vol.slope, "sigmoid slope");
  v("vol", "center", c.vol.center, "sigmoid center");
  v("vol", "level", c.vol.level, "constant level");
  v("vol", "table_z", c.vol.table_z, "table knots (comma separated)");
  v("vol", "table_sigma", c.vol.table_sigma, "table values (comma separated)");
  v("vol", "scale", c.vol.scale, "exponential scale");
  v("vol", "exp_slope", c.vol.exp_slope, "exponential slope");
  v("vol", "allow_unbounded", c.vol.allow_unbounded,
    "admit the unbounded exponential family (outside the model hypotheses)");

  v("grid", "dt_over_eps", c.grid.dt_over_eps, "path-dump step as a fraction of eps");
  v("grid", "warmup_over_eps", c.grid.warmup_over_eps, "simulated past in units of eps");
  v("grid", "exact_cells", c.grid.exact_cells, "kernel cells sampled exactly (0..16)");
  v("grid", "scheme", c.grid.scheme, "truncated_moving_average | cholesky_exact");

  v("payoff", "kind", c.payoff.kind, "call | ramp");
  v("payoff", "strike", c.payoff.strike, "call strike");
  v("payoff", "k1", c.payoff.k1, "ramp lower strike");
  v("payoff", "k2", c.payoff.k2, "ramp upper strike");
  v("payoff", "width", c.payoff.width, "ramp log smoothing width");

  v("mc", "paths", c.mc.paths, "Monte Carlo paths for pricing");
  v("mc", "seed", c.mc.seed, "master seed");
  v("mc", "antithetic", c.mc.antithetic, "antithetic pairs");
  v("mc", "control_variates", c.mc.control_variates, "regression control variates");
  v("mc", "dt_over_eps", c.mc.dt_over_eps, "pricing step as a fraction of eps");
  v("mc", "warmup_over_eps", c.mc.warmup_over_eps, "pricing warmup in units of eps");
  v("mc", "exact_cells", c.mc.exact_cells, "exact kernel cells for pricing paths");
  v("mc", "variant", c.mc.variant, "stationary | riemann_liouville");
  v("mc", "z0", c.mc.z0, "Riemann-Liouville start value");
  v("mc", "t", c.mc.t, "evaluation time of the asymptotic price");

  v("study", "eps_grid", c.study.eps_grid, "convergence grid, dyadic, decreasing");
  v("study", "lemma_paths", c.study.lemma_paths, "paths for vartheta/phi/kappa");
  v("study", "vartheta_eps", c.study.vartheta_eps, "eps of the vartheta check");
  v("study", "phi_eps_grid", c.study.phi_eps_grid, "phi variance grid");
  v("study", "kappa_eps_grid", c.study.kappa_eps_grid, "kappa grid");
  v("study", "smile_eps", c.study.smile_eps, "eps of the smile sweep");
  v("study", "smile_log_moneyness", c.study.smile_log_moneyness, "half-width of log(K/x0)");
  v("study", "smile_points", c.study.smile_points, "strikes in the smile sweep");
  v("study", "ts_regime", c.study.ts_regime, "fast | slow | small_amplitude");
  v("study", "ts_tau_mr", c.study.ts_tau_mr, "mean-reversion time of the term-structure sweep");
  v("study", "ts_delta_sigma", c.study.ts_delta_sigma, "volatility amplitude for the reporting form");
  v("study", "ts_tau_bar", c.study.ts_tau_bar, "diffusion time (0: 2/sigma_bar^2)");
  v("study", "ts_tau_min", c.study.ts_tau_min, "shortest maturity");
  v("study", "ts_tau_max", c.study.ts_tau_max, "longest maturity");
  v("study", "ts_points", c.study.ts_points, "maturities, log spaced");

  v("simulate", "dump_paths", c.simulate.dump_paths, "paths written by the simulate command");

  v("output", "dir", c.output.dir, "output directory");
  v("output", "formats", c.output.formats, "subset of csv,json,txt");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string t = trim(s);
  if (t.empty()) return out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  T v{};
  const auto* b = s.data();
  const auto* e = s.data() + s.size();
  auto r = std::from_chars(b, e, v);
  if (s.empty() || r.ec != std::errc{} || r.ptr != e)
    throw ConfigError(key, "cannot parse '" + s + "' as a number");
  return v;
}

void assign(const std::string& key, const std::string& raw, double& f) {
  f = parse_number<double>(key, raw);
  if (!std::isfinite(f)) throw ConfigError(key, "must be finite");
}
void assign(const std::string& key, const std::string& raw, long& f) { f = parse_number<long>(key, raw); }
void assign(const std::string& key, const std::string& raw, int& f) { f = parse_number<int>(key, raw); }
void assign(const std::string& key, const std::string& raw, std::uint64_t& f) {
  f = parse_number<std::uint64_t>(key, raw);
}
void assign(const std::string& key, const std::string& raw, bool& f) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes") f = true;
  else if (s == "false" || s == "0" || s == "no") f = false;
  else throw ConfigError(key, "expected true or false, got '" + s + "'");
}
void assign(const std::string&, const std::string& raw, std::string& f) { f = trim(raw); }
void assign(const std::string& key, const std::string& raw, std::vector<double>& f) {
  f.clear();
  for (const auto& item : split_list(raw)) {
    double x = 0.0;
    assign(key, item, x);
    f.push_back(x);
  }
}
void assign(const std::string&, const std::string& raw, std::vector<std::string>& f) {
  f = split_list(raw);
}

// Shortest text that parses back to the same double.
std::string format_double(double x) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string render(double f) { return format_double(f); }
std::string render(long f) { return std::to_string(f); }
std::string render(int f) { return std::to_string(f); }
std::string render(std::uint64_t f) { return std::to_string(f); }
std::string render(bool f) { return f ? "true" : "false"; }
std::string render(const std::string& f) { return f; }
std::string render(const std::vector<double>& f) {
  std::string s;
  for (std::size_t i = 0; i < f.size(); ++i) s += (i ? ", " : "") + format_double(f[i]);
  return s;
}
std::string render(const std::vector<std::string>& f) {
  std::string s;
  for (std::size_t i = 0; i < f.size(); ++i) s += (i ? "," : "") + f[i];
  return s;
}

template <class T>
void from_json_value(const std::string& key, const nlohmann::json& j, T& f) {
  try {
    f = j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key, std::string("bad JSON value: ") + e.what());
  }
}

// Runs fn and re-labels any ConfigError/DomainError with the section name.
template <class Fn>
auto in_section(const std::string& section, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    const std::string msg = e.key().empty() ? what : what.substr(e.key().size() + 2);
    throw ConfigError(section + "." + (e.key().empty() ? "?" : e.key()), msg);
  } catch (const DomainError& e) {
    throw ConfigError(section, e.what());
  }
}

}  // namespace

VolFunction RunConfig::vol_function() const {
  return in_section("vol", [&] {
    const auto& v = vol;
    if (v.family == "sigmoid")
      return VolFunction(BoundedSigmoid{v.sigma_min, v.sigma_max, v.slope, v.center});
    if (v.family == "constant") return VolFunction(ConstantVol{v.level});
    if (v.family == "table") return VolFunction(UserTable{v.table_z, v.table_sigma});
    if (v.family == "exponential")
      return VolFunction(ExponentialVol{v.scale, v.exp_slope}, v.allow_unbounded);
    throw ConfigError("family", "expected sigmoid, constant, table or exponential, got '" + v.family + "'");
  });
}

ModelParams RunConfig::model_params(double eps) const {
  VolFunction f = vol_function();
  return in_section("model", [&] {
    if (!(model.hurst > 0.0 && model.hurst < 0.5)) throw ConfigError("hurst", "must lie in (0, 1/2)");
    ModelParams mp{Hurst(model.hurst), eps, model.rho, f, model.x0, model.maturity};
    mp.validate();
    return mp;
  });
}

ModelParams RunConfig::model_params() const { return model_params(model.eps); }

SimGrid RunConfig::sim_grid(const ModelParams& mp) const {
  return in_section("grid", [&] {
    if (!(grid.dt_over_eps > 0.0)) throw ConfigError("dt_over_eps", "must be > 0");
    SimGrid g = SimGrid::for_model(mp, grid.dt_over_eps, grid.warmup_over_eps,
                                   scheme_from_string(grid.scheme));
    g.exact_cells = grid.exact_cells;
    g.validate(mp);
    return g;
  });
}

Payoff RunConfig::make_payoff() const {
  return in_section("payoff", [&] {
    if (payoff.kind == "call") return Payoff(Call{payoff.strike}, model.x0);
    if (payoff.kind == "ramp") return Payoff(SmoothRamp{payoff.k1, payoff.k2, payoff.width}, model.x0);
    throw ConfigError("kind", "expected call or ramp, got '" + payoff.kind + "'");
  });
}

MCOptions RunConfig::mc_options() const {
  return in_section("mc", [&] {
    MCOptions o;
    o.antithetic = mc.antithetic;
    o.control_variates = mc.control_variates;
    o.dt_over_eps = mc.dt_over_eps;
    o.warmup_over_eps = mc.warmup_over_eps;
    o.exact_cells = mc.exact_cells;
    if (mc.variant == "stationary") o.variant = Variant::Stationary;
    else if (mc.variant == "riemann_liouville") o.variant = Variant::RiemannLiouville;
    else throw ConfigError("variant", "expected stationary or riemann_liouville, got '" + mc.variant + "'");
    o.z0 = mc.z0;
    return o;
  });
}

bool RunConfig::wants(const std::string& format) const {
  for (const auto& f : output.formats)
    if (f == format) return true;
  return false;
}

void RunConfig::validate() const {
  const ModelParams mp = model_params();
  sim_grid(mp);
  make_payoff();
  const MCOptions o = mc_options();

  auto check = [](bool ok, const std::string& key, const std::string& msg) {
    if (!ok) throw ConfigError(key, msg);
  };
  check(mc.paths > 0, "mc.paths", "must be > 0");
  check(o.dt_over_eps > 0.0 && o.dt_over_eps <= 0.25, "mc.dt_over_eps", "must lie in (0, 1/4]");
  check(o.warmup_over_eps >= 20.0, "mc.warmup_over_eps", "must be >= 20");
  check(o.exact_cells >= 0 && o.exact_cells <= 16, "mc.exact_cells", "must be in [0, 16]");
  check(std::isfinite(mc.z0), "mc.z0", "must be finite");
  check(mc.t >= 0.0 && mc.t <= model.maturity, "mc.t", "must lie in [0, maturity]");

  auto check_grid = [&](const std::vector<double>& g, const std::string& key) {
    check(g.size() >= 4, key, "needs at least 4 points");
    for (std::size_t k = 0; k < g.size(); ++k) {
      check(g[k] > 0.0, key, "entries must be > 0");
      if (k) check(g[k] < g[k - 1], key, "must be strictly decreasing");
    }
  };
  check_grid(study.eps_grid, "study.eps_grid");
  for (std::size_t k = 1; k < study.eps_grid.size(); ++k)
    check(std::abs(study.eps_grid[k - 1] / study.eps_grid[k] - 2.0) < 1e-9, "study.eps_grid",
          "must be dyadic (consecutive ratio 2)");
  check_grid(study.phi_eps_grid, "study.phi_eps_grid");
  check_grid(study.kappa_eps_grid, "study.kappa_eps_grid");
  check(study.lemma_paths > 1, "study.lemma_paths", "must be > 1");
  check(study.vartheta_eps > 0.0, "study.vartheta_eps", "must be > 0");
  check(study.smile_eps > 0.0, "study.smile_eps", "must be > 0");
  check(study.smile_log_moneyness > 0.0, "study.smile_log_moneyness", "must be > 0");
  check(study.smile_points >= 2, "study.smile_points", "must be >= 2");
  in_section("study", [&] { return regime_from_string(study.ts_regime); });
  check(study.ts_tau_mr > 0.0, "study.ts_tau_mr", "must be > 0");
  check(study.ts_tau_bar >= 0.0, "study.ts_tau_bar", "must be >= 0");
  check(study.ts_tau_min > 0.0 && study.ts_tau_max > study.ts_tau_min, "study.ts_tau_min",
        "need 0 < ts_tau_min < ts_tau_max");
  check(study.ts_points >= 2, "study.ts_points", "must be >= 2");
  check(simulate.dump_paths >= 0, "simulate.dump_paths", "must be >= 0");
  check(!output.dir.empty(), "output.dir", "must not be empty");
  for (const auto& f : output.formats)
    check(f == "csv" || f == "json" || f == "txt", "output.formats",
          "unknown format '" + f + "' (expected csv, json, txt)");
}

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", e.what());
  }

  RunConfig c;
  std::set<std::string> known_sections;
  std::set<std::string> known_keys;
  visit(c, [&](const char* section, const char* key, auto&, const char*) {
    known_sections.insert(section);
    known_keys.insert(std::string(section) + "." + key);
  });
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(section, "key outside any section");
    if (!known_sections.count(section)) throw ConfigError(section, "unknown section");
    for (const auto& [key, _] : body)
      if (!known_keys.count(section + "." + key))
        throw ConfigError(section + "." + key, "unknown key");
  }
  visit(c, [&](const char* section, const char* key, auto& field, const char*) {
    const std::string path = std::string(section) + "." + key;
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.')))
      assign(path, *v, field);
  });
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  if (std::filesystem::path(path).extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    return from_sidecar(j);
  }
  return parse_config(ss.str());
}

nlohmann::ordered_json make_sidecar(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["header"] = {{"config_hash", config_hash(c)}, {"seed", c.mc.seed}};
  j["config"] = to_json(c);
  return j;
}

RunConfig from_sidecar(const nlohmann::json& j, const std::vector<std::string>& allowed_extra) {
  if (!j.is_object() || !j.contains("config"))
    throw ConfigError("config", "sidecar needs a \"config\" object");
  for (const auto& [key, _] : j.items()) {
    if (key == "header" || key == "config") continue;
    if (std::find(allowed_extra.begin(), allowed_extra.end(), key) == allowed_extra.end())
      throw ConfigError(key, "unknown sidecar key");
  }
  RunConfig c = from_json(j["config"]);
  if (j.contains("header") && j["header"].contains("config_hash")) {
    const auto& h = j["header"]["config_hash"];
    if (!h.is_string() || h.get<std::string>() != config_hash(c))
      throw ConfigError("header.config_hash", "does not match the embedded config");
  }
  return c;
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  visit(c, [&](const char* section, const char* key, const auto& field, const char*) {
    j[section][key] = field;
  });
  return j;
}

RunConfig from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config", "JSON config must be an object");
  RunConfig c;
  std::set<std::string> known_sections;
  std::set<std::string> known_keys;
  visit(c, [&](const char* section, const char* key, auto&, const char*) {
    known_sections.insert(section);
    known_keys.insert(std::string(section) + "." + key);
  });
  for (const auto& [section, body] : j.items()) {
    if (!known_sections.count(section) || !body.is_object())
      throw ConfigError(section, "unknown section");
    for (const auto& [key, _] : body.items())
      if (!known_keys.count(section + "." + key))
        throw ConfigError(section + "." + key, "unknown key");
  }
  visit(c, [&](const char* section, const char* key, auto& field, const char*) {
    if (j.contains(section) && j[section].contains(key))
      from_json_value(std::string(section) + "." + key, j[section][key], field);
  });
  return c;
}

std::string to_ini(const RunConfig& c) {
  std::string out;
  std::string current;
  visit(c, [&](const char* section, const char* key, const auto& field, const char*) {
    if (current != section) {
      out += (current.empty() ? "[" : "\n[") + std::string(section) + "]\n";
      current = section;
    }
    out += std::string(key) + " = " + render(field) + "\n";
  });
  return out;
}

std::string config_hash(const RunConfig& c) {
  auto j = to_json(c);
  j.erase("output");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string defaults_help() {
  const RunConfig c;
  std::string out = "Config keys (section.key = default):\n";
  visit(c, [&](const char* section, const char* key, const auto& field, const char* doc) {
    std::string lhs = "  " + std::string(section) + "." + key + " = " + render(field);
    if (lhs.size() < 48) lhs.resize(48, ' ');
    out += lhs + "  " + doc + "\n";
  });
  return out;
}

}  // namespace roughvol::cli

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "roughvol/error.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void check_thread_env() {
  const char* env = std::getenv("ROUGHVOL_THREADS");
  if (!env) return;
  const std::string s = env;
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || v < 1)
    throw roughvol::ConfigError("ROUGHVOL_THREADS", "must be a positive integer, got '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace roughvol;
  using namespace roughvol::cli;

  CLI::App app{"Fast mean-reverting rough volatility: asymptotic prices and Monte Carlo studies"};
  app.footer("\n" + defaults_help() +
             "\nEnvironment: ROUGHVOL_THREADS caps the worker threads.\n"
             "Exit codes: 0 success, 2 configuration error, 3 numerical failure.");
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long> paths;
  std::optional<double> eps, hurst, rho;
  std::optional<std::string> out;
  std::optional<std::string> formats;
  app.add_option("--config", config_path, "key-value config file or a JSON sidecar");
  app.add_option("--seed", seed, "master seed (mc.seed)");
  app.add_option("--paths", paths,
                 "path count: mc.paths for price and convergence, study.lemma_paths for "
                 "vartheta/phi/kappa, simulate.dump_paths for simulate");
  app.add_option("--eps", eps, "model.eps");
  app.add_option("--hurst", hurst, "model.hurst");
  app.add_option("--rho", rho, "model.rho");
  app.add_option("--out", out, "output.dir");
  app.add_option("--format", formats, "output.formats, e.g. csv,json,txt");

  auto* params = app.add_subcommand("params", "sigma_bar, D-bar, tau_bar and Gaussian moments");
  auto* price = app.add_subcommand("price", "corrected price next to a Monte Carlo estimate");
  auto* simulate = app.add_subcommand("simulate", "dump simulated paths as CSV");
  auto* study = app.add_subcommand("study", "run one verification study");
  std::string which;
  study->add_option("which", which, "convergence | vartheta | phi | kappa | smile | termstructure")
      ->required()
      ->check(CLI::IsMember({"convergence", "vartheta", "phi", "kappa", "smile", "termstructure"}));
  for (auto* sub : {params, price, simulate, study}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    check_thread_env();
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) cfg.mc.seed = *seed;
    if (eps) cfg.model.eps = *eps;
    if (hurst) cfg.model.hurst = *hurst;
    if (rho) cfg.model.rho = *rho;
    if (out) cfg.output.dir = *out;
    if (formats) cfg.output.formats = parse_config("[output]\nformats = " + *formats).output.formats;
    if (paths) {
      if (*study && (which == "vartheta" || which == "phi" || which == "kappa"))
        cfg.study.lemma_paths = *paths;
      else if (*simulate)
        cfg.simulate.dump_paths = static_cast<int>(*paths);
      else
        cfg.mc.paths = *paths;
    }
    cfg.validate();

    Report report = *params     ? cmd_params(cfg)
                    : *price    ? cmd_price(cfg)
                    : *simulate ? cmd_simulate(cfg, cfg.output.dir)
                                : cmd_study(cfg, which);
    emit(report, cfg);
    report.write_text(std::cout);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

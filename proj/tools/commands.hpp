#pragma once

#include <filesystem>
#include <string>

#include "config.hpp"
#include "report.hpp"

namespace roughvol::cli {

Report cmd_params(const RunConfig& cfg);
Report cmd_price(const RunConfig& cfg);
/// Also writes one CSV per dumped path and the paths.json sidecar into `dir`.
Report cmd_simulate(const RunConfig& cfg, const std::filesystem::path& dir);
/// which: convergence | vartheta | phi | kappa | smile | termstructure.
Report cmd_study(const RunConfig& cfg, const std::string& which);

/// Writes the report in the configured formats plus config.json into
/// cfg.output.dir (created if missing).
void emit(const Report& r, const RunConfig& cfg);

}  // namespace roughvol::cli

#include "roughvol/model.hpp"

#include <cmath>
#include <string>

#include "roughvol/error.hpp"

namespace roughvol {

Hurst::Hurst(double value) : value_(value) {
  if (!(value > 0.0 && value < 0.5))
    throw DomainError("Hurst exponent must lie in (0, 1/2), got " + std::to_string(value));
}

void ModelParams::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps", "must be finite and > 0");
  if (!(std::abs(rho) <= 1.0)) throw ConfigError("rho", "must lie in [-1, 1]");
  if (!(x0 > 0.0) || !std::isfinite(x0)) throw ConfigError("x0", "must be finite and > 0");
  if (!(maturity > 0.0) || !std::isfinite(maturity))
    throw ConfigError("maturity", "must be finite and > 0");
}

}  // namespace roughvol

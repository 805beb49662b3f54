#include "mixedlattice/params.hpp"

#include <cmath>
#include <sstream>

#include "mixedlattice/errors.hpp"

namespace mixedlattice {

int LatticeParams::steps_per_floquet() const {
  const double ratio = floquet_time() / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    std::ostringstream msg;
    msg << "time step " << dt << " does not divide the Floquet period " << floquet_time();
    throw ConfigError(msg.str());
  }
  return static_cast<int>(rounded);
}

void LatticeParams::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
  if (!(heff > 0.0)) throw ConfigError("heff must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (floquet_periods < 1) throw ConfigError("floquet_periods must be >= 1");
  steps_per_floquet();
}

}  // namespace mixedlattice

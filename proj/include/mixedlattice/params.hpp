#pragma once

#include <numbers>

namespace mixedlattice {

inline constexpr double kPi = std::numbers::pi;
/// Spatial period of the lattice.
inline constexpr double kLatticePeriod = 2.0 * kPi;
/// Period of the amplitude modulation.
inline constexpr double kDrivePeriod = 2.0 * kPi;

/// Physical and numerical parameters of the modulated lattice
/// H = p^2/2 - gamma (1 + epsilon cos t) cos x.
struct LatticeParams {
  double gamma = 0.2;
  double epsilon = 0.15;
  double heff = 0.4;
  double dt = 4.0 * kPi / 1000.0;
  /// Drive periods per Floquet step; the Floquet period is 2 pi times this.
  int floquet_periods = 2;

  double floquet_time() const { return kDrivePeriod * floquet_periods; }
  /// Number of split steps in one Floquet period. Throws ConfigError when
  /// dt does not divide the Floquet period.
  int steps_per_floquet() const;
  /// Throws ConfigError on violated invariants.
  void validate() const;

  LatticeParams with_epsilon(double eps) const {
    LatticeParams copy = *this;
    copy.epsilon = eps;
    return copy;
  }
};

}  // namespace mixedlattice

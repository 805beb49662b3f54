#pragma once

#include <span>
#include <vector>

#include "mixedlattice/band.hpp"
#include "mixedlattice/propagator.hpp"

namespace mixedlattice {

/// Translation-invariant tight-binding model on a ring: hoppings[n] is
/// <m + n|H_eff|m> (cyclic n).
struct EffectiveModel {
  CVector hoppings;
  double heff = 0.0;
  double floquet_time = 0.0;

  int n_sites() const { return static_cast<int>(hoppings.size()); }
  /// max_n |t_{N-n} - conj(t_n)| together with |Im t_0|.
  double hermiticity_defect() const;
  /// Band energies at the canonical quasi-momenta (inverse of hoppings_from_band).
  std::vector<double> band_energies() const;
};

/// t_n = (1/N) sum_m eps(beta_m) exp(i beta_m lambda n). Throws GridMismatch
/// unless the band is sampled on the canonical N-point grid.
EffectiveModel hoppings_from_band(const BlochBand& band);
EffectiveModel hoppings_from_energies(std::span<const double> energies, double heff,
                                      double floquet_time);

/// exp(-i H_eff T_F / heff) applied through the plane-wave eigenbasis.
class EffectivePropagator {
 public:
  explicit EffectivePropagator(const EffectiveModel& model);

  int n_sites() const { return static_cast<int>(phases_.size()); }
  /// One Floquet period on site amplitudes.
  CVector apply(const CVector& amplitudes) const;
  /// k periods at once.
  CVector apply_power(const CVector& amplitudes, int periods) const;
  CMatrix dense() const;

 private:
  std::vector<double> phases_;
};

EffectivePropagator effective_propagator(const EffectiveModel& model);

struct DynamicsRecord {
  std::vector<double> times;
  /// [sample][site].
  std::vector<std::vector<double>> site_probabilities;
  std::vector<double> spread;
  /// Empty for effective runs.
  std::vector<double> chaotic_fraction;
  int n0 = 0;
};

DynamicsRecord run_effective_dynamics(const EffectiveModel& model, int n0,
                                      int n_periods);

/// Split-step propagation of the undriven Wannier state of cell n0 on the full
/// grid, sampled once per Floquet period.
DynamicsRecord run_exact_dynamics(const LatticeParams& params, const Grid& grid,
                                  int n0, int n_periods, const WannierBasis& basis);

struct DynamicsComparison {
  std::vector<double> times;
  std::vector<double> l1;
  std::vector<double> spread_relative_error;
  double max_l1 = 0.0;
};

/// Throws ShapeMismatch unless both records share n0, sample times and sizes.
DynamicsComparison compare_dynamics(const DynamicsRecord& exact,
                                    const DynamicsRecord& effective);

}  // namespace mixedlattice

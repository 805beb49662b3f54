#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mixedlattice/params.hpp"
#include "mixedlattice/wave.hpp"

namespace mixedlattice {

/// -gamma (1 + epsilon cos t) cos x.
double potential(double x, double t, const LatticeParams& params);

/// Symmetrized split-step evolution U_P F U_X F^-1 U_P on a grid, with the
/// Bloch kinetic term (p - heff beta)^2 / 2. The potential is evaluated at
/// the midpoint of each step. Operates in place on momentum-representation
/// data holding `batch` contiguous vectors.
class SplitStepPropagator {
 public:
  SplitStepPropagator(const LatticeParams& params, const Grid& grid,
                      double beta = 0.0, int batch = 1);

  const Grid& grid() const { return grid_; }
  /// One step from t to t + dt.
  void step(Complex* momentum_data, double t);
  /// n_steps steps starting at t0.
  void advance(Complex* momentum_data, double t0, int n_steps);

 private:
  LatticeParams params_;
  Grid grid_;
  int batch_;
  CenteredFourier fourier_;
  // Half kinetic factor with the centering phase folded in: the pre-phase of
  // the position transform commutes with the potential and cancels.
  std::vector<Complex> kinetic_in_;
  std::vector<Complex> kinetic_out_;
  // cos x of the N_p distinct in-cell positions; the potential is cell periodic.
  std::vector<double> cos_x_cell_;
  std::vector<Complex> potential_cell_;
};

WaveState split_step(const WaveState& state, double t, const LatticeParams& params,
                     const Grid& grid);

/// Called at t0 and after every Floquet period with the position-space state.
using StroboscopicObserver = std::function<void(const WaveState&)>;

/// Split-step propagation for `duration` (a multiple of dt). Observers are
/// sampled at t0 + j T_F. Returns the final state in position representation.
WaveState propagate(const WaveState& state, double t0, double duration,
                    const LatticeParams& params, const Grid& grid,
                    const StroboscopicObserver& observer = {});

struct FloquetMatrix {
  /// Position-representation Floquet operator of a single cell.
  CMatrix entries;
  double beta = 0.0;
  LatticeParams params;

  /// max |(U^dagger U - I)_ij|.
  double unitarity_residual() const;
};

/// Disk cache of Floquet matrices keyed by (gamma, epsilon, heff, beta, N_p,
/// dt, T_F). File layout: those seven values as little-endian float64, then
/// N_p x N_p row-major (re, im) float64 pairs.
class FloquetCache {
 public:
  explicit FloquetCache(std::filesystem::path directory);
  /// Directory from MIXEDLATTICE_CACHE, if set.
  static std::optional<FloquetCache> from_environment();

  std::optional<FloquetMatrix> load(const LatticeParams& params, double beta,
                                    int n_points_per_cell) const;
  void store(const FloquetMatrix& matrix) const;
  std::filesystem::path path_for(const LatticeParams& params, double beta,
                                 int n_points_per_cell) const;

  long hits() const { return hits_.load(); }
  long misses() const { return misses_.load(); }
  const std::filesystem::path& directory() const { return directory_; }

  FloquetCache(const FloquetCache& other)
      : directory_(other.directory_), hits_(other.hits_.load()), misses_(other.misses_.load()) {}

 private:
  std::filesystem::path directory_;
  mutable std::atomic<long> hits_{0};
  mutable std::atomic<long> misses_{0};
};

void write_floquet_matrix(const std::filesystem::path& path, const FloquetMatrix& matrix);
FloquetMatrix read_floquet_matrix(const std::filesystem::path& path);

/// Floquet operator over T_F at quasi-momentum beta, assembled column by column
/// from propagated position deltas on a single cell. Throws GridMismatch for
/// n_cells != 1 and UnitarityLoss when the residual exceeds 1e-6.
FloquetMatrix build_floquet_matrix(const LatticeParams& params, double beta,
                                   const Grid& cell_grid,
                                   const FloquetCache* cache = nullptr);

/// Orthonormal Wannier states of the undriven lattice, one per cell, all
/// translates of the state centred on x = 0.
class WannierBasis {
 public:
  WannierBasis(Grid grid, CVector central_momentum, std::vector<double> overlaps);

  const Grid& grid() const { return grid_; }
  int size() const { return grid_.n_cells(); }
  /// Position-representation Wannier state of cell n.
  WaveState state(int cell) const;
  /// <w_n|psi> for every cell n.
  CVector project(const WaveState& state) const;
  /// sum_n |<w_n|psi>|^2.
  double regular_weight(const WaveState& state) const;
  /// Winning Gaussian overlap for each beta_m.
  const std::vector<double>& selection_overlaps() const { return overlaps_; }

 private:
  CVector momentum_residue_sums(const WaveState& state) const;

  Grid grid_;
  CVector central_;  // momentum representation of the state centred on x = 0
  std::vector<double> overlaps_;
};

/// Builds the basis at epsilon = 0 regardless of params.epsilon. Throws
/// BandMixing when the winning overlap at any beta is below 0.5.
WannierBasis wannier_states(const LatticeParams& params, const Grid& grid,
                            const FloquetCache* cache = nullptr);

/// 1 - sum_n |<w_n|psi>|^2.
double chaotic_fraction(const WaveState& state, const WannierBasis& basis);

}  // namespace mixedlattice

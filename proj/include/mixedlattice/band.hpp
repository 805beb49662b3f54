#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mixedlattice/propagator.hpp"

namespace mixedlattice {

/// Eigendecomposition of one Floquet matrix.
struct QuasiSpectrum {
  double beta = 0.0;
  CVector eigenvalues;
  /// Orthonormal eigenvectors (columns), position representation.
  CMatrix eigenstates;
  /// |<reference Gaussian|phi_l>|^2, filled by band extraction.
  std::vector<double> regular_overlaps;

  /// max_l ||U v_l - alpha_l v_l||.
  double residual(const CMatrix& u) const;
};

/// Complex Schur decomposition of a unitary (hence normal) matrix; the Schur
/// vectors are the eigenvectors. Throws ConvergenceFailure naming beta.
QuasiSpectrum eig_unitary(const CMatrix& u, double beta = 0.0);
QuasiSpectrum eig_unitary(const FloquetMatrix& u);

/// -(heff / T_F) arg(alpha) on the branch (-pi heff / T_F, pi heff / T_F].
double quasi_energy(Complex alpha, double heff, double floquet_time);

/// Effective regular band sampled over the Brillouin zone [0, 2 pi / lambda).
struct BlochBand {
  std::vector<double> betas;
  std::vector<double> energies;
  /// Winning overlap with the reference Gaussian.
  std::vector<double> overlaps;
  /// 1 where the winning overlap is below 0.5 (regular weight shared by two
  /// states at an avoided crossing), 0 otherwise.
  std::vector<int> branch_flags;
  double heff = 0.0;
  double floquet_time = 0.0;

  int size() const { return static_cast<int>(betas.size()); }
};

/// beta_m = 2 pi m / (n lambda), m = 0..n-1.
std::vector<double> canonical_betas(int n);

/// States of one quasi-momentum ranked by regular overlap (descending).
struct RegularCandidates {
  double beta = 0.0;
  std::vector<double> energies;
  std::vector<double> overlaps;
};

/// Supplies ranked regular candidates at any beta; the Floquet-backed source
/// is used for physics, closed-form sources for synthetic checks.
using SpectrumSource = std::function<RegularCandidates(double beta)>;

struct BandOptions {
  int n_points_per_cell = 32;
  /// Scale applied to the harmonic reference width.
  double width_scale = 1.0;
  const FloquetCache* cache = nullptr;
  /// BandMixing is raised when the two leading overlaps together fall
  /// below this value, i.e. no pair of states carries the regular weight.
  double mixing_floor = 0.5;
  /// BranchEdge is raised when an energy lies closer than this fraction of
  /// pi heff / T_F to the branch cut.
  double edge_margin = 0.01;
};

/// Ranked regular candidates of the Floquet operator at beta.
RegularCandidates floquet_candidates(const LatticeParams& params, double beta,
                                     const BandOptions& options = {});
SpectrumSource floquet_spectrum_source(const LatticeParams& params,
                                       const BandOptions& options = {});

/// Per beta: Floquet matrix, diagonalization, overlap with the Gaussian on
/// the island, and the quasi-energy of the best state. Betas are processed
/// concurrently; the output follows input order.
BlochBand extract_effective_band(const LatticeParams& params,
                                 std::span<const double> betas,
                                 const BandOptions& options = {});

/// Band from an arbitrary source (same selection rule).
BlochBand band_from_source(const SpectrumSource& source, std::span<const double> betas,
                           double heff, double floquet_time);

struct CrossingBranches {
  std::vector<double> betas;
  std::vector<double> upper;
  std::vector<double> lower;
  /// Share of the regular weight carried by the upper branch.
  std::vector<double> upper_mixing;
  double min_gap = 0.0;
  double beta_at_min_gap = 0.0;
  double mixing_at_min_gap = 0.0;
  /// Samples with gap below twice the minimal gap.
  int points_resolving_gap = 0;
};

struct RefineOptions {
  int samples = 41;
  int min_points_in_gap = 8;
  int max_iterations = 40;
};

/// Tracks the two largest-overlap states across [beta_lo, beta_hi] and zooms
/// until the minimal gap is resolved. Throws WindowTooWide when the window
/// holds two separate gap minima.
CrossingBranches refine_crossing(const SpectrumSource& source, double beta_lo,
                                 double beta_hi, const RefineOptions& options = {});

}  // namespace mixedlattice

#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mixedlattice/params.hpp"

namespace mixedlattice {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Centered position/momentum grids of a lattice of n_cells cells with
/// n_points_per_cell samples each. x = 0 is a grid point at the center of
/// cell n_cells / 2 (integer division); p = 0 is the point n_total / 2.
class Grid {
 public:
  Grid(int n_cells, int n_points_per_cell, double heff);

  int n_cells() const { return n_cells_; }
  int n_points_per_cell() const { return n_points_per_cell_; }
  int size() const { return n_cells_ * n_points_per_cell_; }
  double heff() const { return heff_; }
  double dx() const { return kLatticePeriod / n_points_per_cell_; }
  double dp() const { return (2.0 * kPi / kLatticePeriod) * heff_ / n_cells_; }
  /// Grid index of x = 0.
  int origin_index() const;
  /// Cell hosting x = 0.
  int center_cell() const { return n_cells_ / 2; }
  double x(int j) const { return (j - origin_index()) * dx(); }
  double p(int k) const { return (k - size() / 2) * dp(); }
  int cell_of(int j) const { return j / n_points_per_cell_; }

  bool operator==(const Grid& other) const = default;

 private:
  int n_cells_;
  int n_points_per_cell_;
  double heff_;
};

enum class Representation { Position, Momentum };

/// Discretely normalized amplitudes: sum |psi_i|^2 = 1.
struct WaveState {
  CVector amplitudes;
  Representation representation = Representation::Position;
  double time = 0.0;

  double norm_squared() const { return amplitudes.squaredNorm(); }
};

/// Unitary DFT with kernel exp(-i x p / heff) on the centered grids, backed by
/// FFTW. Transforms `batch` contiguous vectors at once (column-major matrices).
class CenteredFourier {
 public:
  CenteredFourier(const Grid& grid, int batch = 1);
  ~CenteredFourier();
  CenteredFourier(const CenteredFourier&) = delete;
  CenteredFourier& operator=(const CenteredFourier&) = delete;

  int size() const { return n_; }
  int batch() const { return batch_; }
  void to_momentum(Complex* data) const;
  void to_position(Complex* data) const;
  /// Plain batched DFTs without the centering phases.
  void forward_unphased(Complex* data) const;
  void backward_unphased(Complex* data) const;
  /// Momentum-side centering phase including 1/sqrt(N).
  const std::vector<Complex>& post_phases() const { return post_; }

 private:
  struct Plans;
  int n_;
  int batch_;
  std::vector<Complex> pre_;
  std::vector<Complex> post_;
  std::unique_ptr<Plans> plans_;
};

WaveState to_momentum(const WaveState& state, const Grid& grid);
WaveState to_position(const WaveState& state, const Grid& grid);

/// Probability of each cell. Momentum-representation input is converted.
std::vector<double> site_probabilities(const WaveState& state, const Grid& grid);

/// Minimal periodic distance between sites on a ring of n sites.
int periodic_distance(int n, int n0, int n_sites);

/// sum_n d(n, n0)^2 p_n with the periodic site distance.
double spread_variance(std::span<const double> probabilities, int n0);

/// Harmonic width sqrt(heff / sqrt(gamma)) of the well ground state.
double harmonic_width(double heff, double gamma);

/// Normalized Gaussian centred on (x0, p0), periodically wrapped on the grid,
/// with Weyl-symmetrized phase exp(i p0 (x - x0/2) / heff).
WaveState gaussian_reference(const Grid& grid, double gamma, double x0, double p0,
                             double width_scale = 1.0);

struct HusimiMesh {
  std::vector<double> xs;
  std::vector<double> ps;
};

/// Husimi density |<coherent(x, p)|psi>|^2, indexed [p index][x index].
/// The coherent states are the reference Gaussians of gaussian_reference.
std::vector<std::vector<double>> husimi(const WaveState& state, const Grid& grid,
                                        double gamma, const HusimiMesh& mesh);

/// Inner product <a|b>; both states must share a representation.
Complex overlap(const WaveState& a, const WaveState& b);

}  // namespace mixedlattice

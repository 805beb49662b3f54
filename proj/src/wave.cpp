#include "mixedlattice/wave.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "mixedlattice/detail/fft.hpp"
#include "mixedlattice/errors.hpp"

namespace mixedlattice {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

namespace detail {

struct PlainFFT::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

PlainFFT::PlainFFT(int n) : plans_(std::make_unique<Plans>()) {
  std::vector<Complex> scratch(n);
  std::lock_guard lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->forward = fftw_plan_dft_1d(n, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_FORWARD, flags);
  plans_->backward = fftw_plan_dft_1d(n, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_BACKWARD, flags);
}

PlainFFT::~PlainFFT() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->backward);
}

void PlainFFT::forward(Complex* data) const { fftw_execute_dft(plans_->forward, as_fftw(data), as_fftw(data)); }
void PlainFFT::backward(Complex* data) const { fftw_execute_dft(plans_->backward, as_fftw(data), as_fftw(data)); }

}  // namespace detail

Grid::Grid(int n_cells, int n_points_per_cell, double heff)
    : n_cells_(n_cells), n_points_per_cell_(n_points_per_cell), heff_(heff) {
  if (n_cells < 1) throw ConfigError("n_cells must be >= 1");
  if (n_points_per_cell < 2 || n_points_per_cell % 2 != 0)
    throw ConfigError("n_points_per_cell must be even and >= 2");
  if (!(heff > 0.0)) throw ConfigError("heff must be positive");
}

int Grid::origin_index() const {
  return n_points_per_cell_ * (n_cells_ / 2) + n_points_per_cell_ / 2;
}

struct CenteredFourier::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

CenteredFourier::CenteredFourier(const Grid& grid, int batch)
    : n_(grid.size()), batch_(batch), plans_(std::make_unique<Plans>()) {
  // exp(-i x_j p_k / h) = exp(-2 pi i (j - j0)(k - k0) / N) factorizes into a
  // pre-phase on j, a plain forward DFT, and a post-phase on k.
  const int j0 = grid.origin_index();
  const int k0 = n_ / 2;
  pre_.resize(n_);
  post_.resize(n_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
  for (int j = 0; j < n_; ++j) {
    const double phase_pre = 2.0 * kPi * std::fmod(static_cast<double>(j) * k0, n_) / n_;
    pre_[j] = std::polar(1.0, phase_pre);
    const double phase_post =
        2.0 * kPi * (std::fmod(static_cast<double>(j0) * j, n_) - std::fmod(static_cast<double>(j0) * k0, n_)) / n_;
    post_[j] = std::polar(scale, phase_post);
  }

  std::vector<Complex> scratch(static_cast<std::size_t>(n_) * batch_);
  std::lock_guard lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  int dims[1] = {n_};
  plans_->forward = fftw_plan_many_dft(1, dims, batch_, as_fftw(scratch.data()), nullptr, 1, n_,
                                       as_fftw(scratch.data()), nullptr, 1, n_, FFTW_FORWARD, flags);
  plans_->backward = fftw_plan_many_dft(1, dims, batch_, as_fftw(scratch.data()), nullptr, 1, n_,
                                        as_fftw(scratch.data()), nullptr, 1, n_, FFTW_BACKWARD, flags);
}

CenteredFourier::~CenteredFourier() {
  std::lock_guard lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

void CenteredFourier::to_momentum(Complex* data) const {
  for (int b = 0; b < batch_; ++b) {
    Complex* col = data + static_cast<std::size_t>(b) * n_;
    for (int j = 0; j < n_; ++j) col[j] *= pre_[j];
  }
  fftw_execute_dft(plans_->forward, as_fftw(data), as_fftw(data));
  for (int b = 0; b < batch_; ++b) {
    Complex* col = data + static_cast<std::size_t>(b) * n_;
    for (int k = 0; k < n_; ++k) col[k] *= post_[k];
  }
}

void CenteredFourier::to_position(Complex* data) const {
  for (int b = 0; b < batch_; ++b) {
    Complex* col = data + static_cast<std::size_t>(b) * n_;
    for (int k = 0; k < n_; ++k) col[k] *= std::conj(post_[k]);
  }
  fftw_execute_dft(plans_->backward, as_fftw(data), as_fftw(data));
  for (int b = 0; b < batch_; ++b) {
    Complex* col = data + static_cast<std::size_t>(b) * n_;
    for (int j = 0; j < n_; ++j) col[j] *= std::conj(pre_[j]);
  }
}

void CenteredFourier::forward_unphased(Complex* data) const {
  fftw_execute_dft(plans_->forward, as_fftw(data), as_fftw(data));
}

void CenteredFourier::backward_unphased(Complex* data) const {
  fftw_execute_dft(plans_->backward, as_fftw(data), as_fftw(data));
}

namespace {

void check_length(const WaveState& state, const Grid& grid) {
  if (state.amplitudes.size() != grid.size())
    throw GridMismatch("state has " + std::to_string(state.amplitudes.size()) +
                       " amplitudes, grid has " + std::to_string(grid.size()));
}

}  // namespace

WaveState to_momentum(const WaveState& state, const Grid& grid) {
  check_length(state, grid);
  if (state.representation == Representation::Momentum) return state;
  WaveState out = state;
  CenteredFourier(grid).to_momentum(out.amplitudes.data());
  out.representation = Representation::Momentum;
  return out;
}

WaveState to_position(const WaveState& state, const Grid& grid) {
  check_length(state, grid);
  if (state.representation == Representation::Position) return state;
  WaveState out = state;
  CenteredFourier(grid).to_position(out.amplitudes.data());
  out.representation = Representation::Position;
  return out;
}

std::vector<double> site_probabilities(const WaveState& state, const Grid& grid) {
  const WaveState pos = to_position(state, grid);
  const double total = pos.amplitudes.squaredNorm();
  std::vector<double> p(grid.n_cells(), 0.0);
  const int np = grid.n_points_per_cell();
  for (int n = 0; n < grid.n_cells(); ++n)
    p[n] = pos.amplitudes.segment(static_cast<Eigen::Index>(n) * np, np).squaredNorm() / total;
  return p;
}

int periodic_distance(int n, int n0, int n_sites) {
  int d = std::abs(n - n0) % n_sites;
  return std::min(d, n_sites - d);
}

double spread_variance(std::span<const double> probabilities, int n0) {
  const int n_sites = static_cast<int>(probabilities.size());
  double acc = 0.0;
  for (int n = 0; n < n_sites; ++n) {
    const double d = periodic_distance(n, n0, n_sites);
    acc += d * d * probabilities[n];
  }
  return acc;
}

double harmonic_width(double heff, double gamma) { return std::sqrt(heff / std::sqrt(gamma)); }

WaveState gaussian_reference(const Grid& grid, double gamma, double x0, double p0,
                             double width_scale) {
  const double sigma = width_scale * harmonic_width(grid.heff(), gamma);
  const double length = grid.n_cells() * kLatticePeriod;
  WaveState g;
  g.amplitudes.resize(grid.size());
  g.representation = Representation::Position;
  for (int j = 0; j < grid.size(); ++j) {
    double d = std::remainder(grid.x(j) - x0, length);  // minimal image
    const double envelope = std::exp(-d * d / (2.0 * sigma * sigma));
    g.amplitudes[j] = std::polar(envelope, p0 * (d + 0.5 * x0) / grid.heff());
  }
  g.amplitudes.normalize();
  return g;
}

Complex overlap(const WaveState& a, const WaveState& b) {
  if (a.representation != b.representation)
    throw GridMismatch("overlap of states in different representations");
  if (a.amplitudes.size() != b.amplitudes.size())
    throw GridMismatch("overlap of states with different lengths");
  return a.amplitudes.dot(b.amplitudes);  // conjugates the first argument
}

std::vector<std::vector<double>> husimi(const WaveState& state, const Grid& grid, double gamma,
                                        const HusimiMesh& mesh) {
  const WaveState pos = to_position(state, grid);
  std::vector<std::vector<double>> density(mesh.ps.size(), std::vector<double>(mesh.xs.size()));
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t ip = 0; ip < mesh.ps.size(); ++ip) {
    for (std::size_t ix = 0; ix < mesh.xs.size(); ++ix) {
      const WaveState coherent = gaussian_reference(grid, gamma, mesh.xs[ix], mesh.ps[ip]);
      density[ip][ix] = std::norm(overlap(coherent, pos));
    }
  }
  return density;
}

}  // namespace mixedlattice

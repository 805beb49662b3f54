#include "mixedlattice/propagator.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mixedlattice/band.hpp"
#include "mixedlattice/detail/parallel.hpp"
#include "mixedlattice/errors.hpp"

namespace mixedlattice {

double potential(double x, double t, const LatticeParams& params) {
  return -params.gamma * (1.0 + params.epsilon * std::cos(t)) * std::cos(x);
}

SplitStepPropagator::SplitStepPropagator(const LatticeParams& params, const Grid& grid,
                                         double beta, int batch)
    : params_(params), grid_(grid), batch_(batch), fourier_(grid, batch) {
  const double h = grid.heff();
  const auto& post = fourier_.post_phases();
  kinetic_in_.resize(grid.size());
  kinetic_out_.resize(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    const double q = grid.p(k) - h * beta;
    const Complex half = std::polar(1.0, -q * q * params.dt / (4.0 * h));
    kinetic_in_[k] = half * std::conj(post[k]);
    kinetic_out_[k] = half * post[k];
  }
  const int np = grid.n_points_per_cell();
  cos_x_cell_.resize(np);
  potential_cell_.resize(np);
  // Offsets inside a cell map to the same x modulo lambda in every cell.
  for (int j = 0; j < np; ++j) cos_x_cell_[j] = std::cos(grid.x(j));
}

void SplitStepPropagator::step(Complex* data, double t) {
  const int n = grid_.size();
  const int np = grid_.n_points_per_cell();
  const double t_mid = t + 0.5 * params_.dt;
  const double drive = params_.gamma * (1.0 + params_.epsilon * std::cos(t_mid));
  for (int j = 0; j < np; ++j)
    potential_cell_[j] = std::polar(1.0, drive * cos_x_cell_[j] * params_.dt / grid_.heff());

  for (int b = 0; b < batch_; ++b) {
    Complex* col = data + static_cast<std::size_t>(b) * n;
    for (int k = 0; k < n; ++k) col[k] *= kinetic_in_[k];
  }
  fourier_.backward_unphased(data);
  for (int b = 0; b < batch_; ++b) {
    Complex* col = data + static_cast<std::size_t>(b) * n;
    for (int j = 0; j < n; ++j) col[j] *= potential_cell_[j % np];
  }
  fourier_.forward_unphased(data);
  for (int b = 0; b < batch_; ++b) {
    Complex* col = data + static_cast<std::size_t>(b) * n;
    for (int k = 0; k < n; ++k) col[k] *= kinetic_out_[k];
  }
}

void SplitStepPropagator::advance(Complex* data, double t0, int n_steps) {
  for (int s = 0; s < n_steps; ++s) step(data, t0 + s * params_.dt);
}

WaveState split_step(const WaveState& state, double t, const LatticeParams& params,
                     const Grid& grid) {
  const Representation original = state.representation;
  WaveState work = to_momentum(state, grid);
  SplitStepPropagator prop(params, grid);
  prop.step(work.amplitudes.data(), t);
  work.time = t + params.dt;
  return original == Representation::Position ? to_position(work, grid) : work;
}

WaveState propagate(const WaveState& state, double t0, double duration,
                    const LatticeParams& params, const Grid& grid,
                    const StroboscopicObserver& observer) {
  const double ratio = duration / params.dt;
  const long n_steps = std::lround(ratio);
  if (n_steps < 0 || std::abs(ratio - n_steps) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError("propagation duration must be a non-negative multiple of dt");
  const int per_floquet = params.steps_per_floquet();

  SplitStepPropagator prop(params, grid);
  CenteredFourier fourier(grid);
  WaveState work = to_position(state, grid);
  work.time = t0;
  auto emit = [&](const WaveState& momentum_state, double t) {
    if (!observer) return;
    WaveState pos = momentum_state;
    fourier.to_position(pos.amplitudes.data());
    pos.representation = Representation::Position;
    pos.time = t;
    observer(pos);
  };
  fourier.to_momentum(work.amplitudes.data());
  work.representation = Representation::Momentum;
  emit(work, t0);
  for (long s = 0; s < n_steps; ++s) {
    prop.step(work.amplitudes.data(), t0 + s * params.dt);
    if ((s + 1) % per_floquet == 0) emit(work, t0 + (s + 1) * params.dt);
  }
  fourier.to_position(work.amplitudes.data());
  work.representation = Representation::Position;
  work.time = t0 + n_steps * params.dt;
  return work;
}

double FloquetMatrix::unitarity_residual() const {
  const CMatrix defect = entries.adjoint() * entries - CMatrix::Identity(entries.rows(), entries.cols());
  return defect.cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------- cache

namespace {

std::array<double, 7> cache_key(const LatticeParams& params, double beta, int n_points) {
  return {params.gamma, params.epsilon, params.heff, beta, static_cast<double>(n_points),
          params.dt, params.floquet_time()};
}

std::uint64_t fnv1a(const std::array<double, 7>& key) {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : key) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace

FloquetCache::FloquetCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::optional<FloquetCache> FloquetCache::from_environment() {
  const char* dir = std::getenv("MIXEDLATTICE_CACHE");
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  return FloquetCache(dir);
}

std::filesystem::path FloquetCache::path_for(const LatticeParams& params, double beta,
                                             int n_points_per_cell) const {
  char name[64];
  std::snprintf(name, sizeof name, "floquet_%016llx.bin",
                static_cast<unsigned long long>(fnv1a(cache_key(params, beta, n_points_per_cell))));
  return directory_ / name;
}

void write_floquet_matrix(const std::filesystem::path& path, const FloquetMatrix& matrix) {
  const int n = static_cast<int>(matrix.entries.rows());
  const auto key = cache_key(matrix.params, matrix.beta, n);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(reinterpret_cast<const char*>(key.data()), sizeof(double) * key.size());
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const double pair[2] = {matrix.entries(r, c).real(), matrix.entries(r, c).imag()};
        out.write(reinterpret_cast<const char*>(pair), sizeof pair);
      }
    }
    if (!out) throw std::runtime_error("failed to write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

FloquetMatrix read_floquet_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<double, 7> key{};
  in.read(reinterpret_cast<char*>(key.data()), sizeof(double) * key.size());
  const int n = static_cast<int>(key[4]);
  if (!in || n < 1 || static_cast<double>(n) != key[4])
    throw std::runtime_error("corrupt Floquet header in " + path.string());
  FloquetMatrix m;
  m.params.gamma = key[0];
  m.params.epsilon = key[1];
  m.params.heff = key[2];
  m.beta = key[3];
  m.params.dt = key[5];
  m.params.floquet_periods = static_cast<int>(std::lround(key[6] / kDrivePeriod));
  m.entries.resize(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double pair[2];
      in.read(reinterpret_cast<char*>(pair), sizeof pair);
      m.entries(r, c) = {pair[0], pair[1]};
    }
  }
  if (!in) throw std::runtime_error("truncated Floquet matrix in " + path.string());
  return m;
}

std::optional<FloquetMatrix> FloquetCache::load(const LatticeParams& params, double beta,
                                                int n_points_per_cell) const {
  const auto path = path_for(params, beta, n_points_per_cell);
  if (std::filesystem::exists(path)) {
    try {
      FloquetMatrix m = read_floquet_matrix(path);
      if (cache_key(m.params, m.beta, static_cast<int>(m.entries.rows())) ==
          cache_key(params, beta, n_points_per_cell)) {
        m.params = params;
        ++hits_;
        return m;
      }
    } catch (const std::exception&) {
      // unreadable entries are recomputed and overwritten
    }
  }
  ++misses_;
  return std::nullopt;
}

void FloquetCache::store(const FloquetMatrix& matrix) const {
  write_floquet_matrix(path_for(matrix.params, matrix.beta, static_cast<int>(matrix.entries.rows())),
                       matrix);
}

FloquetMatrix build_floquet_matrix(const LatticeParams& params, double beta,
                                   const Grid& cell_grid, const FloquetCache* cache) {
  if (cell_grid.n_cells() != 1)
    throw GridMismatch("Floquet matrices are built on a single cell, got " +
                       std::to_string(cell_grid.n_cells()) + " cells");
  const int np = cell_grid.n_points_per_cell();
  if (cache) {
    if (auto hit = cache->load(params, beta, np)) return *hit;
  }

  FloquetMatrix result;
  result.beta = beta;
  result.params = params;
  CMatrix columns = CMatrix::Identity(np, np);  // position deltas
  SplitStepPropagator prop(params, cell_grid, beta, np);
  CenteredFourier fourier(cell_grid, np);
  fourier.to_momentum(columns.data());
  prop.advance(columns.data(), 0.0, params.steps_per_floquet());
  fourier.to_position(columns.data());
  result.entries = std::move(columns);

  const double residual = result.unitarity_residual();
  if (residual > 1e-6) {
    std::ostringstream msg;
    msg << "Floquet matrix at beta=" << beta << " has unitarity residual " << residual;
    throw UnitarityLoss(msg.str());
  }
  if (cache) cache->store(result);
  return result;
}

// ---------------------------------------------------------------- Wannier

WannierBasis::WannierBasis(Grid grid, CVector central_momentum, std::vector<double> overlaps)
    : grid_(std::move(grid)), central_(std::move(central_momentum)), overlaps_(std::move(overlaps)) {
  if (central_.size() != grid_.size()) throw GridMismatch("Wannier state length does not match grid");
}

WaveState WannierBasis::state(int cell) const {
  const int nc = grid_.n_cells();
  const int shift = ((cell - grid_.center_cell()) % nc + nc) % nc;
  WaveState w;
  w.amplitudes.resize(grid_.size());
  for (int k = 0; k < grid_.size(); ++k) {
    const long residue = (static_cast<long>(k) * shift) % nc;
    w.amplitudes[k] = central_[k] * std::polar(1.0, -2.0 * kPi * residue / nc);
  }
  w.representation = Representation::Momentum;
  return to_position(w, grid_);
}

CVector WannierBasis::momentum_residue_sums(const WaveState& state) const {
  const WaveState mom = to_momentum(state, grid_);
  const int nc = grid_.n_cells();
  CVector sums = CVector::Zero(nc);
  for (int k = 0; k < grid_.size(); ++k) sums[k % nc] += std::conj(central_[k]) * mom.amplitudes[k];
  return sums;
}

CVector WannierBasis::project(const WaveState& state) const {
  const CVector sums = momentum_residue_sums(state);
  const int nc = grid_.n_cells();
  CVector coeffs(nc);
  for (int n = 0; n < nc; ++n) {
    const int shift = ((n - grid_.center_cell()) % nc + nc) % nc;
    Complex acc = 0.0;
    for (int r = 0; r < nc; ++r) {
      const long residue = (static_cast<long>(r) * shift) % nc;
      acc += sums[r] * std::polar(1.0, 2.0 * kPi * residue / nc);
    }
    coeffs[n] = acc;
  }
  return coeffs;
}

double WannierBasis::regular_weight(const WaveState& state) const {
  return grid_.n_cells() * momentum_residue_sums(state).squaredNorm();
}

WannierBasis wannier_states(const LatticeParams& params, const Grid& grid,
                            const FloquetCache* cache) {
  const LatticeParams undriven = params.with_epsilon(0.0);
  const int nc = grid.n_cells();
  const int np = grid.n_points_per_cell();
  const int n_total = grid.size();
  const Grid cell(1, np, grid.heff());
  const int center = cell.origin_index();

  CVector central = CVector::Zero(n_total);
  std::vector<double> overlaps(nc, 0.0);
  detail::parallel_for(nc, [&](int m) {
    const double beta = static_cast<double>(m) / nc * (2.0 * kPi / kLatticePeriod);
    const FloquetMatrix u = build_floquet_matrix(undriven, beta, cell, cache);
    const QuasiSpectrum spec = eig_unitary(u);
    const WaveState ref = gaussian_reference(cell, params.gamma, 0.0, grid.heff() * beta);
    Eigen::Index best = 0;
    const Eigen::VectorXd weights = (ref.amplitudes.adjoint() * spec.eigenstates).cwiseAbs2().transpose();
    overlaps[m] = weights.maxCoeff(&best);

    WaveState u_state;
    u_state.amplitudes = spec.eigenstates.col(best);
    const Complex at_origin = u_state.amplitudes[center];
    u_state.amplitudes *= std::conj(at_origin) / std::abs(at_origin);
    u_state.representation = Representation::Position;
    const WaveState u_mom = to_momentum(u_state, cell);
    const double scale = 1.0 / std::sqrt(static_cast<double>(nc));
    for (int k = 0; k < np; ++k) {
      const long K = ((static_cast<long>(nc) * k - m) % n_total + n_total) % n_total;
      central[K] = u_mom.amplitudes[k] * scale;
    }
  });
  for (int m = 0; m < nc; ++m) {
    if (overlaps[m] < 0.5) {
      std::ostringstream msg;
      msg << "regular overlap " << overlaps[m] << " < 0.5 at beta index " << m;
      throw BandMixing(msg.str());
    }
  }
  return WannierBasis(grid, std::move(central), std::move(overlaps));
}

double chaotic_fraction(const WaveState& state, const WannierBasis& basis) {
  const double total = state.amplitudes.squaredNorm();
  return 1.0 - basis.regular_weight(state) / total;
}

}  // namespace mixedlattice

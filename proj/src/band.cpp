#include "mixedlattice/band.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mixedlattice/detail/parallel.hpp"
#include "mixedlattice/errors.hpp"

namespace mixedlattice {

double QuasiSpectrum::residual(const CMatrix& u) const {
  double worst = 0.0;
  for (Eigen::Index l = 0; l < eigenstates.cols(); ++l) {
    const CVector r = u * eigenstates.col(l) - eigenvalues[l] * eigenstates.col(l);
    worst = std::max(worst, r.norm());
  }
  return worst;
}

QuasiSpectrum eig_unitary(const CMatrix& u, double beta) {
  // Schur vectors of a normal matrix: an orthonormal eigenbasis, also inside
  // near-degenerate clusters.
  Eigen::ComplexSchur<CMatrix> schur(u);
  if (!u.allFinite() || schur.info() != Eigen::Success || !schur.matrixT().diagonal().allFinite()) {
    std::ostringstream msg;
    msg << "Schur decomposition did not converge at beta=" << beta;
    throw ConvergenceFailure(msg.str());
  }
  QuasiSpectrum spec;
  spec.beta = beta;
  spec.eigenvalues = schur.matrixT().diagonal();
  spec.eigenstates = schur.matrixU();
  return spec;
}

QuasiSpectrum eig_unitary(const FloquetMatrix& u) { return eig_unitary(u.entries, u.beta); }

double quasi_energy(Complex alpha, double heff, double floquet_time) {
  double phase = -std::arg(alpha);  // in [-pi, pi)
  if (phase <= -kPi) phase += 2.0 * kPi;
  return heff / floquet_time * phase;
}

std::vector<double> canonical_betas(int n) {
  std::vector<double> betas(n);
  for (int m = 0; m < n; ++m) betas[m] = 2.0 * kPi * m / (n * kLatticePeriod);
  return betas;
}

RegularCandidates floquet_candidates(const LatticeParams& params, double beta,
                                     const BandOptions& options) {
  const Grid cell(1, options.n_points_per_cell, params.heff);
  const FloquetMatrix u = build_floquet_matrix(params, beta, cell, options.cache);
  const QuasiSpectrum spec = eig_unitary(u);
  // In the Bloch frame the island sits at p = heff beta.
  const WaveState ref =
      gaussian_reference(cell, params.gamma, 0.0, params.heff * beta, options.width_scale);
  const Eigen::VectorXd weights = (ref.amplitudes.adjoint() * spec.eigenstates).cwiseAbs2().transpose();

  std::vector<int> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return weights[a] > weights[b]; });
  RegularCandidates c;
  c.beta = beta;
  for (int idx : order) {
    c.energies.push_back(quasi_energy(spec.eigenvalues[idx], params.heff, params.floquet_time()));
    c.overlaps.push_back(weights[idx]);
  }
  return c;
}

SpectrumSource floquet_spectrum_source(const LatticeParams& params, const BandOptions& options) {
  return [params, options](double beta) { return floquet_candidates(params, beta, options); };
}

namespace {

void fill_band(BlochBand& band, const std::vector<RegularCandidates>& cands, double mixing_floor,
               double edge_margin) {
  const double edge = kPi * band.heff / band.floquet_time;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    const double second = c.overlaps.size() > 1 ? c.overlaps[1] : 0.0;
    if (c.overlaps.front() + second < mixing_floor) {
      std::ostringstream msg;
      msg << "no regular state at beta=" << c.beta << " (leading overlaps " << c.overlaps.front()
          << ", " << second << ")";
      throw BandMixing(msg.str());
    }
    const double e = c.energies.front();
    if (std::abs(e) > (1.0 - edge_margin) * edge) {
      std::ostringstream msg;
      msg << "regular quasi-energy " << e << " at beta=" << c.beta << " touches the branch cut +-"
          << edge;
      throw BranchEdge(msg.str());
    }
    band.betas[i] = c.beta;
    band.energies[i] = e;
    band.overlaps[i] = c.overlaps.front();
    band.branch_flags[i] = c.overlaps.front() < 0.5 ? 1 : 0;
  }
}

}  // namespace

BlochBand band_from_source(const SpectrumSource& source, std::span<const double> betas,
                           double heff, double floquet_time) {
  const int n = static_cast<int>(betas.size());
  std::vector<RegularCandidates> cands(n);
  detail::parallel_for(n, [&](int i) { cands[i] = source(betas[i]); });
  BlochBand band;
  band.heff = heff;
  band.floquet_time = floquet_time;
  band.betas.resize(n);
  band.energies.resize(n);
  band.overlaps.resize(n);
  band.branch_flags.resize(n);
  fill_band(band, cands, BandOptions{}.mixing_floor, BandOptions{}.edge_margin);
  return band;
}

BlochBand extract_effective_band(const LatticeParams& params, std::span<const double> betas,
                                 const BandOptions& options) {
  params.validate();
  const int n = static_cast<int>(betas.size());
  std::vector<RegularCandidates> cands(n);
  detail::parallel_for(n, [&](int i) { cands[i] = floquet_candidates(params, betas[i], options); });
  BlochBand band;
  band.heff = params.heff;
  band.floquet_time = params.floquet_time();
  band.betas.resize(n);
  band.energies.resize(n);
  band.overlaps.resize(n);
  band.branch_flags.resize(n);
  fill_band(band, cands, options.mixing_floor, options.edge_margin);
  return band;
}

// ---------------------------------------------------------------- refinement

namespace {

struct BranchSample {
  double beta, upper, lower, upper_mixing;
  double gap() const { return upper - lower; }
};

BranchSample sample_branches(const SpectrumSource& source, double beta) {
  const RegularCandidates c = source(beta);
  if (c.energies.size() < 2) throw WindowTooWide("spectrum source returned fewer than two states");
  const double e1 = c.energies[0], e2 = c.energies[1];
  const double o1 = c.overlaps[0], o2 = c.overlaps[1];
  const double total = std::max(o1 + o2, 1e-300);
  if (e1 >= e2) return {beta, e1, e2, o1 / total};
  return {beta, e2, e1, o2 / total};
}

// Vertex of the parabola through gap^2 at the samples around `best`; the
// squared gap of a two-level crossing is exactly quadratic in beta.
std::pair<double, double> parabolic_minimum(const std::vector<BranchSample>& s, std::size_t best) {
  const std::size_t lo = best >= 2 ? best - 2 : 0;
  const std::size_t hi = std::min(s.size() - 1, lo + 4);
  Eigen::MatrixXd a(hi - lo + 1, 3);
  Eigen::VectorXd b(hi - lo + 1);
  const double b0 = s[best].beta;
  for (std::size_t i = lo; i <= hi; ++i) {
    const double x = s[i].beta - b0;
    a.row(i - lo) << 1.0, x, x * x;
    b[i - lo] = s[i].gap() * s[i].gap();
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
  if (!(c[2] > 0.0)) return {b0, s[best].gap()};
  const double x_min = -c[1] / (2.0 * c[2]);
  const double lo_beta = s[lo].beta - b0, hi_beta = s[hi].beta - b0;
  if (x_min < lo_beta || x_min > hi_beta) return {b0, s[best].gap()};
  const double g2 = c[0] - c[1] * c[1] / (4.0 * c[2]);
  return {b0 + x_min, g2 > 0.0 ? std::sqrt(g2) : s[best].gap()};
}

}  // namespace

CrossingBranches refine_crossing(const SpectrumSource& source, double beta_lo, double beta_hi,
                                 const RefineOptions& options) {
  if (!(beta_hi > beta_lo)) throw ConfigError("refine_crossing needs beta_hi > beta_lo");
  std::vector<BranchSample> samples;
  auto add_range = [&](double lo, double hi) {
    const int n = options.samples;
    std::vector<BranchSample> fresh(n);
    detail::parallel_for(n, [&](int i) {
      fresh[i] = sample_branches(source, lo + (hi - lo) * i / (n - 1));
    });
    samples.insert(samples.end(), fresh.begin(), fresh.end());
    std::sort(samples.begin(), samples.end(),
              [](const BranchSample& a, const BranchSample& b) { return a.beta < b.beta; });
  };

  add_range(beta_lo, beta_hi);
  // A second, separate dip in the first coarse pass means two crossings.
  {
    std::size_t best = 0;
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (samples[i].gap() < samples[best].gap()) best = i;
    const double g = samples[best].gap();
    int dips = 0;
    bool inside = false;
    for (const auto& s : samples) {
      const bool low = s.gap() < 2.0 * g;
      if (low && !inside) ++dips;
      inside = low;
    }
    if (dips > 1) {
      std::ostringstream msg;
      msg << "window [" << beta_lo << ", " << beta_hi << "] holds " << dips << " gap minima";
      throw WindowTooWide(msg.str());
    }
  }

  CrossingBranches out;
  std::size_t best = 0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    best = 0;
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (samples[i].gap() < samples[best].gap()) best = i;
    const double g = samples[best].gap();
    int resolving = 0;
    double lo = samples[best].beta, hi = samples[best].beta;
    for (const auto& s : samples) {
      if (s.gap() < 2.0 * g) {
        ++resolving;
        lo = std::min(lo, s.beta);
        hi = std::max(hi, s.beta);
      }
    }
    out.points_resolving_gap = resolving;
    if (resolving >= options.min_points_in_gap) break;
    // Zoom on the dip: bracket it by the neighbouring samples.
    const double left = best > 0 ? samples[best - 1].beta : samples[best].beta;
    const double right = best + 1 < samples.size() ? samples[best + 1].beta : samples[best].beta;
    const double half = std::max({hi - lo, right - left, 1e-15}) * 0.75;
    add_range(samples[best].beta - half, samples[best].beta + half);
  }

  const auto [beta_min, gap_min] = parabolic_minimum(samples, best);
  out.min_gap = gap_min;
  out.beta_at_min_gap = beta_min;
  out.mixing_at_min_gap = samples[best].upper_mixing;
  for (const auto& s : samples) {
    out.betas.push_back(s.beta);
    out.upper.push_back(s.upper);
    out.lower.push_back(s.lower);
    out.upper_mixing.push_back(s.upper_mixing);
  }
  return out;
}

}  // namespace mixedlattice

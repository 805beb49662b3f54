#include "mixedlattice/effective.hpp"

#include <cmath>
#include <sstream>

#include "mixedlattice/detail/fft.hpp"
#include "mixedlattice/errors.hpp"

namespace mixedlattice {

double EffectiveModel::hermiticity_defect() const {
  const int n = n_sites();
  double worst = n > 0 ? std::abs(hoppings[0].imag()) : 0.0;
  for (int k = 1; k < n; ++k) worst = std::max(worst, std::abs(hoppings[n - k] - std::conj(hoppings[k])));
  return worst;
}

std::vector<double> EffectiveModel::band_energies() const {
  std::vector<Complex> work(hoppings.data(), hoppings.data() + hoppings.size());
  detail::PlainFFT(n_sites()).forward(work.data());
  std::vector<double> energies(work.size());
  for (std::size_t m = 0; m < work.size(); ++m) energies[m] = work[m].real();
  return energies;
}

EffectiveModel hoppings_from_energies(std::span<const double> energies, double heff,
                                      double floquet_time) {
  const int n = static_cast<int>(energies.size());
  if (n < 1) throw GridMismatch("empty band");
  std::vector<Complex> work(energies.begin(), energies.end());
  detail::PlainFFT(n).backward(work.data());
  EffectiveModel model;
  model.hoppings.resize(n);
  for (int k = 0; k < n; ++k) model.hoppings[k] = work[k] / static_cast<double>(n);
  model.heff = heff;
  model.floquet_time = floquet_time;
  if (model.hermiticity_defect() > 1e-10) throw std::logic_error("hoppings of a real band are not Hermitian");
  return model;
}

EffectiveModel hoppings_from_band(const BlochBand& band) {
  const int n = band.size();
  const std::vector<double> expected = canonical_betas(n);
  for (int m = 0; m < n; ++m) {
    if (std::abs(band.betas[m] - expected[m]) > 1e-12) {
      std::ostringstream msg;
      msg << "band sample " << m << " at beta=" << band.betas[m] << ", canonical grid expects "
          << expected[m];
      throw GridMismatch(msg.str());
    }
  }
  return hoppings_from_energies(band.energies, band.heff, band.floquet_time);
}

EffectivePropagator::EffectivePropagator(const EffectiveModel& model) {
  const std::vector<double> energies = model.band_energies();
  phases_.resize(energies.size());
  for (std::size_t m = 0; m < energies.size(); ++m)
    phases_[m] = -energies[m] * model.floquet_time / model.heff;
}

CVector EffectivePropagator::apply_power(const CVector& amplitudes, int periods) const {
  const int n = n_sites();
  if (amplitudes.size() != n) throw GridMismatch("amplitude vector does not match the lattice size");
  std::vector<Complex> work(amplitudes.data(), amplitudes.data() + n);
  const detail::PlainFFT fft(n);
  fft.forward(work.data());
  for (int m = 0; m < n; ++m) work[m] *= std::polar(1.0 / n, phases_[m] * periods);
  fft.backward(work.data());
  return Eigen::Map<const CVector>(work.data(), n);
}

CVector EffectivePropagator::apply(const CVector& amplitudes) const { return apply_power(amplitudes, 1); }

CMatrix EffectivePropagator::dense() const {
  const int n = n_sites();
  CMatrix u(n, n);
  for (int j = 0; j < n; ++j) u.col(j) = apply(CVector::Unit(n, j));
  return u;
}

EffectivePropagator effective_propagator(const EffectiveModel& model) { return EffectivePropagator(model); }

DynamicsRecord run_effective_dynamics(const EffectiveModel& model, int n0, int n_periods) {
  const int n = model.n_sites();
  if (n0 < 0 || n0 >= n) throw ConfigError("initial site outside the lattice");
  const EffectivePropagator prop(model);
  const CVector initial = CVector::Unit(n, n0);
  DynamicsRecord rec;
  rec.n0 = n0;
  for (int j = 0; j <= n_periods; ++j) {
    const CVector psi = prop.apply_power(initial, j);
    std::vector<double> p(n);
    const double total = psi.squaredNorm();
    for (int s = 0; s < n; ++s) p[s] = std::norm(psi[s]) / total;
    rec.times.push_back(j * model.floquet_time);
    rec.spread.push_back(spread_variance(p, n0));
    rec.site_probabilities.push_back(std::move(p));
  }
  return rec;
}

DynamicsRecord run_exact_dynamics(const LatticeParams& params, const Grid& grid, int n0,
                                  int n_periods, const WannierBasis& basis) {
  if (n0 < 0 || n0 >= grid.n_cells()) throw ConfigError("initial cell outside the lattice");
  if (!(basis.grid() == grid)) throw GridMismatch("Wannier basis built on a different grid");
  DynamicsRecord rec;
  rec.n0 = n0;
  const WaveState initial = basis.state(n0);
  propagate(initial, 0.0, n_periods * params.floquet_time(), params, grid, [&](const WaveState& s) {
    std::vector<double> p = site_probabilities(s, grid);
    rec.times.push_back(s.time);
    rec.spread.push_back(spread_variance(p, n0));
    rec.chaotic_fraction.push_back(chaotic_fraction(s, basis));
    rec.site_probabilities.push_back(std::move(p));
  });
  return rec;
}

DynamicsComparison compare_dynamics(const DynamicsRecord& exact, const DynamicsRecord& effective) {
  if (exact.n0 != effective.n0) throw ShapeMismatch("records start from different sites");
  if (exact.times.size() != effective.times.size())
    throw ShapeMismatch("records have different numbers of samples");
  DynamicsComparison cmp;
  for (std::size_t i = 0; i < exact.times.size(); ++i) {
    if (std::abs(exact.times[i] - effective.times[i]) > 1e-9 * std::max(1.0, exact.times[i]))
      throw ShapeMismatch("sample times differ at index " + std::to_string(i));
    const auto& a = exact.site_probabilities[i];
    const auto& b = effective.site_probabilities[i];
    if (a.size() != b.size()) throw ShapeMismatch("records have different lattice sizes");
    double l1 = 0.0;
    for (std::size_t s = 0; s < a.size(); ++s) l1 += std::abs(a[s] - b[s]);
    const double denom = std::max(std::abs(exact.spread[i]), 1e-300);
    const double rel = exact.spread[i] == effective.spread[i]
                           ? 0.0
                           : std::abs(exact.spread[i] - effective.spread[i]) / denom;
    cmp.times.push_back(exact.times[i]);
    cmp.l1.push_back(l1);
    cmp.spread_relative_error.push_back(rel);
    cmp.max_l1 = std::max(cmp.max_l1, l1);
  }
  return cmp;
}

}  // namespace mixedlattice

#include <cmath>
#include <random>

#include "doctest.h"
#include "mixedlattice/band.hpp"
#include "mixedlattice/errors.hpp"
#include "synthetic.hpp"

using namespace mixedlattice;

namespace {

LatticeParams working_point() { return {}; }

CMatrix rotation_product(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  CMatrix u = CMatrix::Identity(n, n);
  for (int r = 0; r < 40; ++r) {
    const int i = rng() % n;
    int j = rng() % n;
    if (j == i) j = (i + 1) % n;
    const double th = angle(rng), ph = angle(rng);
    CMatrix g = CMatrix::Identity(n, n);
    g(i, i) = std::cos(th);
    g(j, j) = std::cos(th);
    g(i, j) = -std::sin(th) * std::polar(1.0, ph);
    g(j, i) = std::sin(th) * std::polar(1.0, -ph);
    u = g * u;
  }
  for (int i = 0; i < n; ++i) u.row(i) *= std::polar(1.0, angle(rng));
  return u;
}

}  // namespace

TEST_CASE("eig_unitary") {
  SUBCASE("identity") {
    const auto s = eig_unitary(CMatrix::Identity(6, 6));
    for (int i = 0; i < 6; ++i) CHECK(std::abs(s.eigenvalues[i] - 1.0) < 1e-14);
  }
  SUBCASE("diagonal") {
    CVector d(4);
    d << std::polar(1.0, 0.1), std::polar(1.0, -2.0), std::polar(1.0, 3.0), std::polar(1.0, 1.2);
    const auto s = eig_unitary(CMatrix(d.asDiagonal()));
    for (int i = 0; i < 4; ++i) {
      double best = 1.0;
      for (int k = 0; k < 4; ++k) best = std::min(best, std::abs(s.eigenvalues[i] - d[k]));
      CHECK(best < 1e-14);
    }
  }
  SUBCASE("reconstruction of a random unitary") {
    const CMatrix u = rotation_product(8, 11);
    CHECK((u.adjoint() * u - CMatrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-13);
    const auto s = eig_unitary(u, 0.5);
    const CMatrix rebuilt = s.eigenstates * s.eigenvalues.asDiagonal() * s.eigenstates.adjoint();
    CHECK((rebuilt - u).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(s.residual(u) < 1e-10);
    for (int i = 0; i < 8; ++i) CHECK(std::abs(std::abs(s.eigenvalues[i]) - 1.0) < 1e-12);
    CHECK(s.beta == 0.5);
  }
  SUBCASE("non-finite input") {
    CMatrix bad = CMatrix::Identity(4, 4);
    bad(1, 2) = std::nan("");
    CHECK_THROWS_AS(eig_unitary(bad, 0.25), ConvergenceFailure);
  }
}

TEST_CASE("quasi_energy branch") {
  CHECK(quasi_energy(1.0, 0.4, 4 * kPi) == 0.0);
  CHECK(quasi_energy(std::polar(1.0, -kPi / 2), 0.4, 4 * kPi) == doctest::Approx(0.05));
  CHECK(quasi_energy(-1.0, 0.4, 4 * kPi) == doctest::Approx(kPi * 0.4 / (4 * kPi)));
  CHECK(quasi_energy(Complex(-1.0, -0.0), 0.4, 4 * kPi) > 0.0);
  CHECK(quasi_energy(std::polar(1.0, kPi - 1e-9), 0.4, 4 * kPi) < 0.0);
}

TEST_CASE("working-point band structure") {
  SUBCASE("parity symmetry away from resonances") {
    const std::vector<double> betas = {0.05, 0.95, 0.4, 0.6, 0.27, 0.73};
    const auto band = extract_effective_band(working_point(), betas);
    for (int i = 0; i < 6; i += 2) CHECK(std::abs(band.energies[i] - band.energies[i + 1]) < 1e-8);
    for (double e : band.energies) CHECK(std::abs(e) < kPi * 0.4 / (4 * kPi));
  }
  SUBCASE("coarse grid equals the same points of a finer grid") {
    const auto coarse = extract_effective_band(working_point(), canonical_betas(8));
    const auto fine = extract_effective_band(working_point(), canonical_betas(16));
    for (int m = 0; m < 8; ++m) {
      CHECK(coarse.betas[m] == fine.betas[2 * m]);
      CHECK(coarse.energies[m] == doctest::Approx(fine.energies[2 * m]).epsilon(1e-12));
    }
  }
  SUBCASE("quasi-energy set under dt halving") {
    LatticeParams half = working_point();
    half.dt /= 2;
    const auto a = floquet_candidates(working_point(), 0.3);
    const auto b = floquet_candidates(half, 0.3);
    std::vector<double> ea = a.energies, eb = b.energies;
    std::sort(ea.begin(), ea.end());
    std::sort(eb.begin(), eb.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < ea.size(); ++i) worst = std::max(worst, std::abs(ea[i] - eb[i]));
    CHECK(worst < 2e-5);
    CHECK(std::abs(a.energies.front() - b.energies.front()) < 1e-6);
  }
  SUBCASE("selection is stable to the reference width") {
    const auto betas = canonical_betas(12);
    BandOptions narrow, wide;
    narrow.width_scale = 0.7;
    wide.width_scale = 1.3;
    const auto a = extract_effective_band(working_point(), betas);
    const auto b = extract_effective_band(working_point(), betas, narrow);
    const auto c = extract_effective_band(working_point(), betas, wide);
    for (int m = 0; m < 12; ++m) {
      CHECK(b.energies[m] == a.energies[m]);
      CHECK(c.energies[m] == a.energies[m]);
    }
  }
  SUBCASE("undriven control band") {
    const auto band = extract_effective_band(working_point().with_epsilon(0.0), canonical_betas(16));
    for (double o : band.overlaps) CHECK(o > 0.99);
    for (int f : band.branch_flags) CHECK(f == 0);
  }
}

TEST_CASE("band selection diagnostics") {
  const double heff = 0.4, tf = 4 * kPi;
  const std::vector<double> betas = {0.1, 0.2};
  SUBCASE("branch edge") {
    const SpectrumSource near_edge = [](double beta) { return RegularCandidates{beta, {0.0995}, {0.9}}; };
    CHECK_THROWS_AS(band_from_source(near_edge, betas, heff, tf), BranchEdge);
  }
  SUBCASE("no regular state") {
    const SpectrumSource spread = [](double beta) { return RegularCandidates{beta, {0.01, 0.02, 0.03}, {0.2, 0.2, 0.1}}; };
    CHECK_THROWS_AS(band_from_source(spread, betas, heff, tf), BandMixing);
  }
  SUBCASE("equal mixing is flagged, not rejected") {
    const SpectrumSource mixed = [](double beta) { return RegularCandidates{beta, {0.01, 0.02}, {0.49, 0.48}}; };
    const auto band = band_from_source(mixed, betas, heff, tf);
    CHECK(band.branch_flags[0] == 1);
    CHECK(band.energies[0] == 0.01);
  }
}

TEST_CASE("refine_crossing on a synthetic two-level crossing") {
  const double w = 1e-3, alpha = 0.05, beta0 = 0.3;
  const auto src = synthetic::source({{beta0, w, alpha}}, [](double) { return 0.02; });
  const auto br = refine_crossing(src, 0.29, 0.31);
  CHECK(br.min_gap == doctest::Approx(2 * w).epsilon(0.01));
  CHECK(std::abs(br.beta_at_min_gap - beta0) < 1e-4);
  CHECK(br.mixing_at_min_gap == doctest::Approx(0.5).epsilon(0.01));
  CHECK(br.points_resolving_gap >= 8);
  for (std::size_t i = 0; i < br.betas.size(); ++i) CHECK(br.upper[i] >= br.lower[i]);

  SUBCASE("sharp crossing needs zooming") {
    const auto sharp = synthetic::source({{0.41, 1e-6, 0.5}}, [](double) { return 0.0; });
    const auto z = refine_crossing(sharp, 0.40, 0.42);
    CHECK(z.min_gap == doctest::Approx(2e-6).epsilon(0.01));
    CHECK(std::abs(z.beta_at_min_gap - 0.41) < 1e-7);
    CHECK(z.points_resolving_gap >= 8);
  }
  SUBCASE("two crossings in one window") {
    const auto two = synthetic::source({{0.3, 1e-4, 0.5}, {0.32, 1e-4, -0.5}}, [](double) { return 0.0; });
    CHECK_THROWS_AS(refine_crossing(two, 0.28, 0.34), WindowTooWide);
  }
}

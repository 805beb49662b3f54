#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "mixedlattice/errors.hpp"
#include "mixedlattice/resonance.hpp"
#include "synthetic.hpp"

using namespace mixedlattice;

namespace {

constexpr double kHeff = 0.4;
constexpr double kTf = 4.0 * kPi;

// Regular-weight branch of the 2x2 crossing, by direct diagonalization.
double regular_branch(double beta, double w, double alpha) {
  Eigen::Matrix2d h;
  h << 0.0, w, w, alpha * beta;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> s(h);
  const double w0 = std::abs(s.eigenvectors()(0, 0)), w1 = std::abs(s.eigenvectors()(0, 1));
  return w0 > w1 ? s.eigenvalues()[0] : s.eigenvalues()[1];
}

// (lambda / 2 pi) int eps(beta - beta0) exp(+i n beta lambda) d beta over one
// zone, split at the jump and integrated panel by panel.
Complex fourier_quadrature(double beta0, double w, double alpha, int n) {
  auto eps = [&](double b) {
    double rel = b - beta0;
    rel -= std::floor(rel + 0.5);
    return eps_resonance(rel, w, alpha);
  };
  using boost::math::quadrature::gauss_kronrod;
  Complex acc = 0.0;
  const int panels = 400;
  // Panels cluster cubically towards the jump.
  for (int side : {-1, 1}) {
    for (int k = 0; k < panels; ++k) {
      const double s0 = 1.0 - double(k) / panels, s1 = 1.0 - double(k + 1) / panels;
      double left = beta0 + side * 0.5 * std::pow(s0, 3), right = beta0 + side * 0.5 * std::pow(s1, 3);
      if (left > right) std::swap(left, right);
      acc += gauss_kronrod<double, 31>::integrate([&](double b) { return eps(b) * std::cos(n * b * kLatticePeriod); }, left, right, 0);
      acc += Complex(0.0, 1.0) * gauss_kronrod<double, 31>::integrate([&](double b) { return eps(b) * std::sin(n * b * kLatticePeriod); }, left, right, 0);
    }
  }
  return acc;
}

BlochBand sampled_band(const SpectrumSource& src, int n) {
  return band_from_source(src, canonical_betas(n), kHeff, kTf);
}

}  // namespace

TEST_CASE("two-level crossing") {
  const double w = 2e-3, alpha = 0.3;
  const auto at0 = two_level(0.0, w, alpha);
  CHECK(at0.eps_plus - at0.eps_minus == doctest::Approx(2 * w));
  CHECK(at0.theta == doctest::Approx(kPi / 4));
  const auto far = two_level(10.0, w, alpha);
  CHECK(far.eps_plus == doctest::Approx(alpha * 10.0).epsilon(1e-6));
  CHECK(std::abs(far.eps_minus) < 1e-5);
  const auto uncoupled = two_level(0.1, 0.0, alpha);
  CHECK(uncoupled.eps_plus - uncoupled.eps_minus == doctest::Approx(alpha * 0.1));
  CHECK(two_level(0.0, 0.0, alpha).eps_plus == two_level(0.0, 0.0, alpha).eps_minus);
  for (double b : {-0.2, -0.01, 0.003, 0.5}) {
    const auto r = two_level(b, w, alpha);
    CHECK(r.eps_plus >= r.eps_minus);
    CHECK(r.eps_plus - r.eps_minus >= 2 * w);
    CHECK(r.theta >= 0.0);
    CHECK(r.theta <= kPi / 2);
  }
}

TEST_CASE("resonant branch") {
  const double w = 1e-3;
  for (double alpha : {0.05, -0.4}) {
    const double s = alpha > 0 ? 1.0 : -1.0;
    CHECK(eps_resonance(1e-12, w, alpha) == doctest::Approx(-s * w));
    CHECK(eps_resonance(-1e-12, w, alpha) == doctest::Approx(s * w));
    CHECK(eps_resonance(0.4, w, alpha) == doctest::Approx(-w * w / (alpha * 0.4)).epsilon(1e-3));
    for (double b : {-0.3, -0.02, -1e-4, 1e-4, 0.01, 0.25}) {
      CHECK(eps_resonance(-b, w, alpha) == doctest::Approx(-eps_resonance(b, w, alpha)).epsilon(1e-14));
      CHECK(std::abs(eps_resonance(b, w, alpha) - regular_branch(b, w, alpha)) < 1e-15);
    }
  }
}

TEST_CASE("resonance detection on injected crossings") {
  const double beta0 = 0.3, w = 1e-3, alpha = 0.05;
  auto background = [](double b) { return 0.02 + 1e-5 * std::cos(2 * kPi * b); };
  const auto src = synthetic::source({{beta0, w, alpha, 0.2}}, background);
  const auto band = sampled_band(src, 4096);
  SUBCASE("with branch refinement") {
    const auto res = detect_resonances(band, &src);
    REQUIRE(res.size() == 1);
    CHECK(res[0].beta0 == doctest::Approx(beta0).epsilon(0.02));
    CHECK(res[0].w == doctest::Approx(w).epsilon(0.02));
    CHECK(res[0].alpha == doctest::Approx(alpha).epsilon(0.02));
    CHECK(res[0].width == doctest::Approx(4 * w / alpha).epsilon(0.04));
    CHECK(res[0].sharp());
  }
  SUBCASE("from the band samples alone") {
    // Crossing narrower than the fit window.
    const auto narrow = synthetic::source({{0.45, 3e-4, 0.5, 0.2}}, background);
    const auto res = detect_resonances(sampled_band(narrow, 4096));
    REQUIRE(res.size() == 1);
    CHECK(res[0].beta0 == doctest::Approx(0.45).epsilon(0.02));
    CHECK(res[0].w == doctest::Approx(3e-4).epsilon(0.02));
    CHECK(res[0].alpha == doctest::Approx(0.5).epsilon(0.02));
    const auto wide = detect_resonances(band);
    REQUIRE(wide.size() == 1);
    CHECK(wide[0].beta0 == doctest::Approx(beta0).epsilon(0.02));
  }
  SUBCASE("sharp resonance with negative slope") {
    const auto sharp = synthetic::source({{0.62, 2e-4, -0.6, 0.2}}, background);
    const auto b = sampled_band(sharp, 4096);
    const auto res = detect_resonances(b, &sharp);
    REQUIRE(res.size() == 1);
    CHECK(res[0].beta0 == doctest::Approx(0.62).epsilon(0.02));
    CHECK(res[0].w == doctest::Approx(2e-4).epsilon(0.02));
    CHECK(res[0].alpha == doctest::Approx(-0.6).epsilon(0.02));
  }
  SUBCASE("smooth band has no resonances") {
    const auto smooth = sampled_band([](double b) { return RegularCandidates{b, {0.08 + 1e-4 * std::cos(2 * kPi * b)}, {1.0}}; }, 4096);
    CHECK(detect_resonances(smooth).empty());
  }
  SUBCASE("jumps with overlapping windows") {
    const double h = 1.0 / 4096;
    const auto twin = synthetic::source({{0.3 + 0.5 * h, 1e-3, 40.0, 0.2}, {0.3 + 3.5 * h, 6e-4, 40.0, 0.2}}, background);
    CHECK_THROWS_AS(detect_resonances(sampled_band(twin, 4096)), OverlappingResonances);
  }
}

TEST_CASE("asymptotic hopping law") {
  SUBCASE("single resonance") {
    const std::vector<Resonance> one = {{0.37, 1e-3, 0.2}};
    const auto t = asymptotic_hoppings(one, 1, 50);
    for (int n = 1; n <= 50; ++n) CHECK(n * std::abs(t[n - 1]) == doctest::Approx(1e-3 / kPi));
    CHECK(typical_amplitude(one) == doctest::Approx(1e-3 / kPi));
  }
  SUBCASE("two resonances beat") {
    const double d = 0.013;
    const std::vector<Resonance> two = {{0.2, 1e-3, 0.2}, {0.2 + d, 1e-3, 0.3}};
    const auto t = asymptotic_hoppings(two, 1, 200);
    for (int n = 1; n <= 200; ++n)
      CHECK(std::abs(t[n - 1]) == doctest::Approx(2e-3 / (kPi * n) * std::abs(std::cos(n * d * kLatticePeriod / 2))).epsilon(1e-9));
    std::vector<Resonance> many(9, Resonance{0.1, 2e-4, 1.0});
    CHECK(typical_amplitude(many) == doctest::Approx(3 * 2e-4 / kPi));
  }
  SUBCASE("quadrature of the resonance Fourier integral") {
    // Width 0.01 of the zone: alpha = 4 W / 0.01.
    const double w = 1e-3, alpha = 0.4, beta0 = 0.31;
    const std::vector<Resonance> one = {{beta0, w, alpha}};
    const auto law = asymptotic_hoppings(one, 1, 1000);
    // The quadrature agrees with the DFT of a densely sampled band.
    const int dense = 1 << 16;
    std::vector<double> e(dense);
    const auto betas = canonical_betas(dense);
    for (int i = 0; i < dense; ++i) {
      double rel = betas[i] - beta0;
      rel -= std::floor(rel + 0.5);
      e[i] = eps_resonance(rel, w, alpha);
    }
    const auto dft = hoppings_from_energies(e, kHeff, kTf).hoppings;
    // The DFT is a trapezoid rule across the jump: error of order 2 W / N.
    for (int n : {3, 40, 300}) {
      const Complex q = fourier_quadrature(beta0, w, alpha, n);
      CHECK(std::abs(dft[n] - q) < 2.0 * w / dense);
    }
    // Phase convention and large-n agreement.
    for (int n : {400, 700, 1000}) {
      const Complex q = fourier_quadrature(beta0, w, alpha, n);
      CHECK(std::abs(law[n - 1] - q) / std::abs(q) < 0.02);
    }
    // The law is the leading term of an expansion in 1 / (n eta), eta = pi width.
    const double err30 = std::abs(law[29] - fourier_quadrature(beta0, w, alpha, 30)) / std::abs(law[29]);
    const double err300 = std::abs(law[299] - fourier_quadrature(beta0, w, alpha, 300)) / std::abs(law[299]);
    CHECK(err30 > 5 * err300);
  }
  SUBCASE("regression helpers") {
    CVector t(600);
    for (int n = 0; n < 600; ++n) t[n] = n == 0 ? 1.0 : 3e-4 / n;
    CHECK(hopping_slope(t, 10, 500) == doctest::Approx(-1.0).epsilon(1e-12));
    for (int n = 1; n < 600; ++n) t[n] = Complex(0.0, 2.0 / (double(n) * n));
    CHECK(hopping_slope(t, 10, 500) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK_THROWS_AS(hopping_slope(t, 10, 600), ConfigError);
    const std::vector<Complex> a = {1.0, 4.0}, b = {2.0, 2.0};
    CHECK(typical_ratio(a, b) == doctest::Approx(1.0));
    CHECK_THROWS_AS(typical_ratio(a, std::vector<Complex>{1.0}), ShapeMismatch);
  }
}

TEST_CASE("fluctuation statistics") {
  SUBCASE("KS statistic") {
    CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(ks_two_sample({1, 2}, {5, 6, 7}) == 1.0);
    CHECK(ks_two_sample({1, 2, 3, 4}, {3, 4, 5, 6}) == doctest::Approx(0.5));
  }
  SUBCASE("single resonance is rejected") {
    const std::vector<Resonance> one = {{0.37, 1e-3, 0.2}};
    const auto law = asymptotic_hoppings(one, 1, 1500);
    CVector t(3000);
    t[0] = 0.0;
    for (int n = 1; n <= 1500; ++n) t[n] = law[n - 1];
    const FluctuationSeries series{t, 1, false};
    const auto st = fluctuation_statistics(std::span(&series, 1));
    CHECK_FALSE(st.universal);
    CHECK(st.ks_distance > st.critical_value);
    for (double v : st.rescaled) CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("many Gaussian couplings give a Rayleigh law") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 1e-4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Resonance> res;
    for (int k = 0; k < 20; ++k) res.push_back({u(rng), std::abs(g(rng)), g(rng) > 0 ? 1.0 : -1.0});
    // Signed Gaussian couplings: the sign of alpha carries the sign of W.
    const auto law = asymptotic_hoppings(res, 1, 2000);
    CVector t = CVector::Zero(4096);
    for (int n = 1; n <= 2000; ++n) t[n] = law[n - 1];
    FluctuationOptions opts;
    opts.n_lo = 100;
    opts.n_hi = 2000;
    const FluctuationSeries series{t, 20, false};
    const auto st = fluctuation_statistics(std::span(&series, 1), opts);
    // Model samples follow the Rayleigh law of unit mean square.
    std::vector<double> model = st.model;
    std::sort(model.begin(), model.end());
    double d = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
      const double cdf = 1.0 - std::exp(-model[i] * model[i]);
      d = std::max({d, std::abs(cdf - double(i) / model.size()), std::abs(cdf - double(i + 1) / model.size())});
    }
    CHECK(d < 0.01);
    CHECK(st.universal);
    double mass = 0.0;
    const double width = st.bin_centers[1] - st.bin_centers[0];
    for (double v : st.density) mass += v * width;
    CHECK(mass == doctest::Approx(1.0));
  }
  SUBCASE("a mirror pair gives a Gaussian times a sine") {
    CVector t = CVector::Constant(2048, 1e-5);
    FluctuationOptions opts;
    opts.model_samples = 50000;
    const FluctuationSeries series{t, 2, true};
    const auto st = fluctuation_statistics(std::span(&series, 1), opts);
    std::vector<double> model = st.model;
    std::sort(model.begin(), model.end());
    double d = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
      // Unit mean square: sqrt(2) w sin(phi); average erf over the phase.
      double cdf = 0.0;
      const int nphi = 400;
      for (int k = 0; k < nphi; ++k) cdf += std::erf(model[i] / (2.0 * std::sin(kPi * (k + 0.5) / nphi)));
      cdf /= nphi;
      d = std::max(d, std::abs(cdf - double(i + 1) / model.size()));
    }
    CHECK(d < 0.015);
  }
  SUBCASE("few uneven mirror pairs follow the fitted couplings") {
    std::vector<Resonance> res;
    for (auto [b, w] : {std::pair{0.0873, 2.8e-4}, {0.1946, 1.4e-3}, {0.3271, 2.9e-5}}) {
      res.push_back({b, w, -0.4});
      res.push_back({1.0 - b, w, 0.4});
    }
    const auto law = asymptotic_hoppings(res, 1, 2000);
    CVector t = CVector::Zero(4096);
    for (int n = 1; n <= 2000; ++n) t[n] = law[n - 1];
    std::vector<double> w;
    for (const auto& r : res) w.push_back(r.w);
    const FluctuationSeries series{t, 6, true, w};
    FluctuationOptions opts;
    opts.n_hi = 2000;
    CHECK_FALSE(fluctuation_statistics(std::span(&series, 1), opts).universal);
    opts.model = CouplingModel::Fitted;
    CHECK(fluctuation_statistics(std::span(&series, 1), opts).universal);
    const FluctuationSeries bare{t, 6, true};
    CHECK_THROWS_AS(fluctuation_statistics(std::span(&bare, 1), opts), ConfigError);
  }
  SUBCASE("window too small") {
    const FluctuationSeries series{CVector::Constant(300, 1e-4), 4, true};
    CHECK_THROWS_AS(fluctuation_statistics(std::span(&series, 1)), WindowTooSmall);
  }
  SUBCASE("seeded and reproducible") {
    const FluctuationSeries series{CVector::Constant(2048, 1e-5), 6, true};
    FluctuationOptions opts;
    opts.model_samples = 2000;
    const auto a = fluctuation_statistics(std::span(&series, 1), opts);
    const auto b = fluctuation_statistics(std::span(&series, 1), opts);
    CHECK(a.model == b.model);
    opts.seed += 1;
    const auto c = fluctuation_statistics(std::span(&series, 1), opts);
    CHECK(a.model != c.model);
  }
}

TEST_CASE("Rabi validity") {
  const std::vector<Resonance> res = {{0.2, 1e-3, 0.3}};
  const int n = 64;
  const auto law = asymptotic_hoppings(std::vector<Resonance>{{0.2, 0.9e-3, 0.3}}, 1, n / 2);
  CVector t = CVector::Zero(n);
  for (int k = 1; k < n / 2; ++k) {
    t[k] = law[k - 1];
    t[n - k] = std::conj(law[k - 1]);
  }
  const EffectiveModel model{t, kHeff, kTf};
  const auto rep = rabi_validity(res, model);
  CHECK(rep.valid);
  CHECK(rep.fastest_n == 1);
  CHECK(rep.slowest_rabi_period == doctest::Approx(kPi * kHeff / 1e-3));
  CHECK(rep.fastest_tunneling_time == doctest::Approx(kPi * kHeff / 0.9e-3));
  // Margin grows linearly in n.
  CHECK(kHeff / std::abs(t[10]) == doctest::Approx(10 * kHeff / std::abs(t[1])));
  EffectiveModel fast = model;
  fast.hoppings[3] = 1e-3;
  fast.hoppings[n - 3] = 1e-3;
  CHECK_FALSE(rabi_validity(res, fast).valid);
}

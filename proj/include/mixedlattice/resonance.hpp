#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mixedlattice/band.hpp"
#include "mixedlattice/effective.hpp"

namespace mixedlattice {

/// Avoided crossing between the regular band and one chaotic state.
struct Resonance {
  double beta0 = 0.0;
  /// |W|, half the minimal gap.
  double w = 0.0;
  /// Slope of the chaotic state, d eps_ch / d beta.
  double alpha = 0.0;
  /// 4 |W| / |alpha|.
  double width = 0.0;
  double fit_residual = 0.0;

  /// Width below a tenth of the Brillouin zone.
  bool sharp() const;
};

struct TwoLevelResult {
  double eps_plus = 0.0;
  double eps_minus = 0.0;
  /// Mixing angle in [0, pi/2], tan 2 theta = |W| / delta.
  double theta = 0.0;
  /// (eps_reg - eps_ch) / 2.
  double delta = 0.0;
};

/// Two-level crossing with eps_reg = 0 and eps_ch = alpha beta.
TwoLevelResult two_level(double beta_rel, double w, double alpha);

/// Energy of the branch with the larger regular projection:
/// (alpha/2) (beta - sgn(beta) sqrt(beta^2 + (2|W|/alpha)^2)).
double eps_resonance(double beta_rel, double w, double alpha);

struct DetectionOptions {
  /// Jump threshold in units of the local median absolute difference.
  double jump_factor = 5.0;
  int median_half_window = 128;
  /// Non-maximum suppression radius (samples).
  int suppression_radius = 8;
  RefineOptions refine;
};

/// Jumps of the effective band, each fitted to (beta0, W, alpha). With a
/// spectrum source the two branches are refined around every jump; without
/// one the fit uses the band samples alone, which resolves only resonances
/// narrower than its window of +-48 samples. Throws OverlappingResonances when
/// two jumps lie closer than five sample intervals, so that their refinement
/// windows overlap.
std::vector<Resonance> detect_resonances(const BlochBand& fine_band,
                                         const SpectrumSource* source = nullptr,
                                         const DetectionOptions& options = {});

/// Sharp-resonance hopping law on the same Fourier convention as
/// hoppings_from_band: t_n = -(i / (pi n)) sum sgn(alpha) |W| exp(i n beta0 lambda).
/// Element k holds n = n_min + k.
std::vector<Complex> asymptotic_hoppings(std::span<const Resonance> resonances,
                                         int n_min, int n_max);

/// sqrt(sum W^2) / pi, the RMS prediction for n |t_n|.
double typical_amplitude(std::span<const Resonance> resonances);

/// Slope of the least-squares fit of log|t_n| against log n over [n_lo, n_hi].
double hopping_slope(const CVector& hoppings, int n_lo, int n_hi);

/// exp(mean log(|a_n| / |b_n|)).
double typical_ratio(std::span<const Complex> numerator,
                     std::span<const Complex> denominator);

/// One hopping series entering the fluctuation statistics.
struct FluctuationSeries {
  CVector hoppings;
  int n_resonances = 0;
  /// Resonances come in mirror pairs (beta0, -beta0) with opposite slopes.
  bool mirror_pairs = true;
  /// Fitted |W| of every resonance; used by the fitted-coupling model.
  std::vector<double> fitted_w;
};

enum class CouplingModel {
  /// Independent Gaussian W with a common variance.
  Gaussian,
  /// The fitted |W| of each series, only the phases random.
  Fitted,
};

struct FluctuationOptions {
  int n_lo = 100;
  int n_hi = 1000;
  int model_samples = 100000;
  std::uint64_t seed = 12345;
  int histogram_bins = 40;
  /// Significance level of the two-sample KS test.
  double significance = 0.01;
  CouplingModel model = CouplingModel::Gaussian;
};

struct FluctuationStatistics {
  std::vector<double> rescaled;
  std::vector<double> model;
  std::vector<double> bin_centers;
  std::vector<double> density;
  double ks_distance = 0.0;
  double critical_value = 0.0;
  int n_samples = 0;
  bool universal = false;
};

/// n |t_n| over [n_lo, n_hi) rescaled by its RMS per series and pooled, then
/// compared (two-sample Kolmogorov-Smirnov) with Monte-Carlo samples of the
/// same sum with uniform phases and Gaussian (or fitted) couplings. Throws
/// WindowTooSmall when fewer than 200 values enter, ConfigError when the fitted
/// model lacks fitted_w.
FluctuationStatistics fluctuation_statistics(std::span<const FluctuationSeries> series,
                                             const FluctuationOptions& options = {});

/// Kolmogorov-Smirnov two-sample statistic sup |F_a - F_b|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

struct RabiReport {
  bool valid = false;
  /// pi heff / max W.
  double slowest_rabi_period = 0.0;
  /// min_n heff / |t_n| over n >= 1.
  double fastest_tunneling_time = 0.0;
  /// n at which the tunneling time is shortest.
  int fastest_n = 0;
};

RabiReport rabi_validity(std::span<const Resonance> resonances, const EffectiveModel& model);

}  // namespace mixedlattice

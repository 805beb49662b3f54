#include "mixedlattice/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "mixedlattice/errors.hpp"

namespace mixedlattice {

namespace {

constexpr double kZoneWidth = 2.0 * kPi / kLatticePeriod;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double median(std::vector<double> v) {
  const auto mid = v.begin() + v.size() / 2;
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

bool Resonance::sharp() const { return width < 0.1 * kZoneWidth; }

TwoLevelResult two_level(double beta_rel, double w, double alpha) {
  const double eps_reg = 0.0;
  const double eps_ch = alpha * beta_rel;
  TwoLevelResult r;
  r.delta = 0.5 * (eps_reg - eps_ch);
  const double root = std::hypot(r.delta, w);
  r.eps_plus = 0.5 * (eps_reg + eps_ch) + root;
  r.eps_minus = 0.5 * (eps_reg + eps_ch) - root;
  // tan 2 theta = |W| / delta with 2 theta in [0, pi].
  r.theta = 0.5 * std::atan2(std::abs(w), r.delta);
  return r;
}

double eps_resonance(double beta_rel, double w, double alpha) {
  if (beta_rel == 0.0) return 0.0;  // midpoint of the jump
  const double b = 2.0 * std::abs(w) / alpha;
  return 0.5 * alpha * (beta_rel - sign(beta_rel) * std::sqrt(beta_rel * beta_rel + b * b));
}

// ---------------------------------------------------------------- detection

namespace {

struct JumpFit {
  double beta0, w, alpha, residual;
};

// Least-squares fit of c0 + c1 x + eps_resonance(x; W, alpha) to band samples
// around a jump, x = beta - beta0, with beta0 confined to the jump interval.
JumpFit fit_from_band(const std::vector<double>& betas, const std::vector<double>& energies,
                      double jump_lo, double jump_hi, double jump) {
  const int n = static_cast<int>(betas.size());
  const double h = (jump_hi - jump_lo);
  const double s = -sign(jump);
  const double span = betas.back() - betas.front();

  // Parameters: t (beta0 = lo + h * logistic(t)), log W, log |alpha|, c0, c1.
  auto model = [&](const Eigen::Matrix<double, 5, 1>& q, double beta) {
    const double beta0 = jump_lo + h / (1.0 + std::exp(-q[0]));
    const double w = std::exp(q[1]);
    // The width 4W/|alpha| cannot exceed the fitted window.
    const double alpha = s * std::max(std::exp(q[2]), 4.0 * w / span);
    const double x = beta - beta0;
    return q[3] + q[4] * x + eps_resonance(x, w, alpha);
  };
  const double w0 = std::max(std::abs(jump) / 2.0, 1e-300);
  double c0 = 0.0;
  for (double e : energies) c0 += e;
  c0 /= n;

  auto residuals = [&](const Eigen::Matrix<double, 5, 1>& par) {
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = model(par, betas[i]) - energies[i];
    return r;
  };
  auto levenberg_marquardt = [&](Eigen::Matrix<double, 5, 1>& q) {
    Eigen::VectorXd r = residuals(q);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    for (int iter = 0; iter < 200; ++iter) {
      Eigen::MatrixXd jac(n, 5);
      for (int k = 0; k < 5; ++k) {
        Eigen::Matrix<double, 5, 1> qp = q;
        const double step = 1e-6 * std::max(1.0, std::abs(q[k])) + (k >= 3 ? 1e-9 : 0.0);
        qp[k] += step;
        jac.col(k) = (residuals(qp) - r) / step;
      }
      const Eigen::MatrixXd jtj = jac.transpose() * jac;
      const Eigen::VectorXd jtr = jac.transpose() * r;
      bool improved = false;
      for (int tries = 0; tries < 20 && !improved; ++tries) {
        Eigen::MatrixXd damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-30);
        const Eigen::Matrix<double, 5, 1> dq = damped.ldlt().solve(-jtr);
        const Eigen::Matrix<double, 5, 1> trial = q + dq;
        const Eigen::VectorXd rt = residuals(trial);
        if (rt.allFinite() && rt.squaredNorm() < cost) {
          q = trial;
          r = rt;
          const double old = cost;
          cost = rt.squaredNorm();
          lambda = std::max(lambda / 3.0, 1e-12);
          improved = true;
          if (old - cost < 1e-14 * old) iter = 1000;
        } else {
          lambda *= 4.0;
        }
      }
      if (!improved) break;
    }
    return cost;
  };

  // Restarts over the crossing width, from one sample to half the window.
  Eigen::Matrix<double, 5, 1> q;
  double cost = std::numeric_limits<double>::infinity();
  for (double width : {h, 4.0 * h, 16.0 * h, 0.5 * span}) {
    Eigen::Matrix<double, 5, 1> start;
    start << 0.0, std::log(w0), std::log(4.0 * w0 / width), c0, 0.0;
    const double c = levenberg_marquardt(start);
    if (c < cost) {
      cost = c;
      q = start;
    }
  }
  JumpFit fit;
  fit.beta0 = jump_lo + h / (1.0 + std::exp(-q[0]));
  fit.w = std::exp(q[1]);
  fit.alpha = s * std::max(std::exp(q[2]), 4.0 * fit.w / span);
  fit.residual = std::sqrt(cost / n) / fit.w;
  return fit;
}

JumpFit fit_from_branches(const CrossingBranches& br) {
  JumpFit fit;
  fit.w = 0.5 * br.min_gap;
  fit.beta0 = br.beta_at_min_gap;
  // Slope of the trace eps_+ + eps_- = eps_reg + eps_ch over the samples where
  // the partner state still carries regular weight.
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < br.betas.size(); ++i) {
    if (br.upper[i] - br.lower[i] < 10.0 * br.min_gap) {
      xs.push_back(br.betas[i] - fit.beta0);
      ys.push_back(br.upper[i] + br.lower[i]);
    }
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  fit.alpha = sxx > 0.0 ? sxy / sxx : 0.0;
  const double offset = my - fit.alpha * mx;
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double half_trace = 0.5 * (offset + fit.alpha * xs[i]);
    const double root = std::hypot(0.5 * fit.alpha * xs[i], fit.w);
    const double du = br.upper[i] - (half_trace + root);
    const double dl = br.lower[i] - (half_trace - root);
    // Positions map back to the sample list through the gap filter above.
    acc += du * du + dl * dl;
  }
  fit.residual = xs.empty() ? 0.0 : std::sqrt(acc / (2.0 * xs.size())) / std::max(fit.w, 1e-300);
  return fit;
}

}  // namespace

std::vector<Resonance> detect_resonances(const BlochBand& band, const SpectrumSource* source,
                                         const DetectionOptions& options) {
  const int n = band.size();
  if (n < 8) throw WindowTooSmall("band too short for resonance detection");
  auto beta_at = [&](long i) {
    const long wraps = (i >= 0 ? i / n : -((-i + n - 1) / n));
    return band.betas[((i % n) + n) % n] + wraps * kZoneWidth;
  };
  auto energy_at = [&](long i) { return band.energies[((i % n) + n) % n]; };

  std::vector<double> diff(n), adiff(n);
  for (int i = 0; i < n; ++i) {
    diff[i] = energy_at(i + 1) - energy_at(i);
    adiff[i] = std::abs(diff[i]);
  }
  const int hw = std::min(options.median_half_window, (n - 1) / 2);
  std::vector<int> peaks;
  for (int i = 0; i < n; ++i) {
    std::vector<double> local;
    local.reserve(2 * hw + 1);
    for (int k = -hw; k <= hw; ++k) local.push_back(adiff[((i + k) % n + n) % n]);
    const double med = median(std::move(local));
    if (!(adiff[i] > options.jump_factor * med)) continue;
    const double left = adiff[(i - 1 + n) % n];
    const double right = adiff[(i + 1) % n];
    if (adiff[i] > left && adiff[i] >= right) peaks.push_back(i);
  }

  std::vector<Resonance> out;
  const int radius = options.suppression_radius;
  for (int i : peaks) {
    bool dominant = true;
    for (int j : peaks) {
      if (j == i) continue;
      const int d = std::min(std::abs(i - j), n - std::abs(i - j));
      if (d > radius) continue;
      if (d < 5) {
        std::ostringstream msg;
        msg << "jumps at beta=" << band.betas[i] << " and beta=" << band.betas[j]
            << " have overlapping refinement windows";
        throw OverlappingResonances(msg.str());
      }
      if (adiff[j] > adiff[i] || (adiff[j] == adiff[i] && j < i)) dominant = false;
    }
    if (!dominant) continue;

    const double lo = beta_at(i), hi = beta_at(i + 1);
    JumpFit fit;
    if (source != nullptr) {
      const double h = hi - lo;
      fit = fit_from_branches(refine_crossing(*source, lo - 2.0 * h, hi + 2.0 * h, options.refine));
    } else {
      const int k = std::min(48, n / 8);
      std::vector<double> bs, es;
      for (long s = i - k + 1; s <= i + k; ++s) {
        bs.push_back(beta_at(s));
        es.push_back(energy_at(s));
      }
      fit = fit_from_band(bs, es, lo, hi, diff[i]);
    }
    Resonance r;
    r.beta0 = std::fmod(std::fmod(fit.beta0, kZoneWidth) + kZoneWidth, kZoneWidth);
    r.w = fit.w;
    r.alpha = fit.alpha;
    r.width = 4.0 * fit.w / std::abs(fit.alpha);
    r.fit_residual = fit.residual;
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const Resonance& a, const Resonance& b) { return a.beta0 < b.beta0; });
  return out;
}

// ---------------------------------------------------------------- hopping law

std::vector<Complex> asymptotic_hoppings(std::span<const Resonance> resonances, int n_min, int n_max) {
  if (n_min < 1 || n_max < n_min) throw ConfigError("asymptotic hoppings need 1 <= n_min <= n_max");
  std::vector<Complex> t(n_max - n_min + 1, 0.0);
  for (int n = n_min; n <= n_max; ++n) {
    Complex acc = 0.0;
    for (const auto& r : resonances)
      acc += sign(r.alpha) * std::abs(r.w) * std::polar(1.0, n * r.beta0 * kLatticePeriod);
    t[n - n_min] = Complex(0.0, -1.0) / (kPi * n) * acc;
  }
  return t;
}

double typical_amplitude(std::span<const Resonance> resonances) {
  if (resonances.empty()) throw ConfigError("typical amplitude needs at least one resonance");
  double acc = 0.0;
  for (const auto& r : resonances) acc += r.w * r.w;
  return std::sqrt(acc) / kPi;
}

double hopping_slope(const CVector& hoppings, int n_lo, int n_hi) {
  if (n_lo < 1 || n_hi >= hoppings.size() || n_hi <= n_lo) throw ConfigError("invalid regression range");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int n = n_lo; n <= n_hi; ++n) {
    const double a = std::abs(hoppings[n]);
    if (!(a > 0.0)) continue;
    const double x = std::log(static_cast<double>(n)), y = std::log(a);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

double typical_ratio(std::span<const Complex> numerator, std::span<const Complex> denominator) {
  if (numerator.size() != denominator.size() || numerator.empty())
    throw ShapeMismatch("ratio of series with different lengths");
  double acc = 0.0;
  for (std::size_t i = 0; i < numerator.size(); ++i)
    acc += std::log(std::abs(numerator[i]) / std::abs(denominator[i]));
  return std::exp(acc / numerator.size());
}

// ---------------------------------------------------------------- statistics

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw WindowTooSmall("KS test on an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = a.size(), nb = b.size();
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

namespace {

void rescale_rms(std::vector<double>& v, std::size_t from) {
  double acc = 0.0;
  for (std::size_t i = from; i < v.size(); ++i) acc += v[i] * v[i];
  const double rms = std::sqrt(acc / (v.size() - from));
  if (rms > 0.0)
    for (std::size_t i = from; i < v.size(); ++i) v[i] /= rms;
}

}  // namespace

FluctuationStatistics fluctuation_statistics(std::span<const FluctuationSeries> series,
                                             const FluctuationOptions& options) {
  if (series.empty()) throw WindowTooSmall("no hopping series");
  FluctuationStatistics st;
  std::vector<int> lengths;
  for (const auto& s : series) {
    const int hi = std::min<int>(options.n_hi, static_cast<int>(s.hoppings.size()) / 2);
    const std::size_t start = st.rescaled.size();
    for (int n = options.n_lo; n < hi; ++n) st.rescaled.push_back(n * std::abs(s.hoppings[n]));
    lengths.push_back(static_cast<int>(st.rescaled.size() - start));
    rescale_rms(st.rescaled, start);
  }
  st.n_samples = static_cast<int>(st.rescaled.size());
  if (st.n_samples < 200)
    throw WindowTooSmall("only " + std::to_string(st.n_samples) + " values in the window, need 200");

  // Model: n|t_n| = |sum_k s_k W_k e^{i phi_k}| / pi with Gaussian W_k and
  // uniform phases; mirror pairs (beta0, -beta0) with opposite slopes combine
  // into 2 W_k sin(phi_k).
  for (std::size_t s = 0; s < series.size(); ++s) {
    const int n_res = series[s].n_resonances;
    if (n_res < 1) throw ConfigError("fluctuation model needs at least one resonance per series");
    const bool paired = series[s].mirror_pairs && n_res % 2 == 0;
    const int terms = paired ? n_res / 2 : n_res;
    const bool fitted = options.model == CouplingModel::Fitted;
    std::vector<double> amplitudes;
    if (fitted) {
      if (static_cast<int>(series[s].fitted_w.size()) != n_res)
        throw ConfigError("fitted coupling model needs one |W| per resonance");
      // One partner of each mirror pair: sorted |W| come in equal couples.
      std::vector<double> w = series[s].fitted_w;
      std::sort(w.begin(), w.end());
      for (int k = 0; k < terms; ++k) amplitudes.push_back(paired ? 0.5 * (w[2 * k] + w[2 * k + 1]) : w[k]);
    }
    const long m = std::max<long>(1, std::lround(static_cast<double>(options.model_samples) * lengths[s] / st.n_samples));
    std::mt19937_64 rng(options.seed + 0x9e3779b97f4a7c15ull * (s + 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    const std::size_t start = st.model.size();
    for (long i = 0; i < m; ++i) {
      Complex acc = 0.0;
      for (int k = 0; k < terms; ++k) {
        const double w = fitted ? amplitudes[k] : gauss(rng);
        const double phi = phase(rng);
        acc += paired ? Complex(2.0 * w * std::sin(phi), 0.0) : w * std::polar(1.0, phi);
      }
      st.model.push_back(std::abs(acc));
    }
    rescale_rms(st.model, start);
  }

  st.ks_distance = ks_two_sample(st.rescaled, st.model);
  const double na = st.rescaled.size(), nb = st.model.size();
  const double c_alpha = std::sqrt(-0.5 * std::log(options.significance / 2.0));
  st.critical_value = c_alpha * std::sqrt((na + nb) / (na * nb));
  st.universal = st.ks_distance < st.critical_value;

  const double top = *std::max_element(st.rescaled.begin(), st.rescaled.end());
  const int bins = options.histogram_bins;
  const double width = top > 0.0 ? top / bins : 1.0;
  st.bin_centers.resize(bins);
  st.density.assign(bins, 0.0);
  for (int b = 0; b < bins; ++b) st.bin_centers[b] = (b + 0.5) * width;
  for (double v : st.rescaled) st.density[std::min(bins - 1, static_cast<int>(v / width))] += 1.0;
  for (double& d : st.density) d /= na * width;
  return st;
}

RabiReport rabi_validity(std::span<const Resonance> resonances, const EffectiveModel& model) {
  if (resonances.empty()) throw ConfigError("Rabi diagnostic needs at least one resonance");
  double w_max = 0.0;
  for (const auto& r : resonances) w_max = std::max(w_max, std::abs(r.w));
  RabiReport rep;
  rep.slowest_rabi_period = kPi * model.heff / w_max;
  rep.fastest_tunneling_time = std::numeric_limits<double>::infinity();
  const int n_sites = model.n_sites();
  for (int n = 1; n <= n_sites / 2; ++n) {
    const double a = std::abs(model.hoppings[n]);
    if (a <= 0.0) continue;
    const double tunnel = model.heff / a;
    if (tunnel < rep.fastest_tunneling_time) {
      rep.fastest_tunneling_time = tunnel;
      rep.fastest_n = n;
    }
  }
  rep.valid = rep.fastest_tunneling_time >= rep.slowest_rabi_period;
  return rep;
}

}  // namespace mixedlattice

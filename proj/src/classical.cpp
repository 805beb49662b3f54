#include "mixedlattice/classical.hpp"

#include <array>
#include <cmath>
#include <queue>

#include "mixedlattice/errors.hpp"

namespace mixedlattice::classical {

namespace {

double reduce_cell(double x) {
  double r = std::fmod(x + kPi, kLatticePeriod);
  if (r < 0.0) r += kLatticePeriod;
  return r - kPi;
}

// State and tangent vector (dx, dp) advanced together.
struct Tangent {
  double x, p, dx, dp;
};

Tangent tangent_rhs(const Tangent& s, double drive) {
  double sx, cx;
  sincos(s.x, &sx, &cx);
  return {s.p, -drive * sx, s.dp, -drive * cx * s.dx};
}

Tangent axpy(const Tangent& a, double h, const Tangent& k) {
  return {a.x + h * k.x, a.p + h * k.p, a.dx + h * k.dx, a.dp + h * k.dp};
}

struct TrajectoryResult {
  double lyapunov = 0.0;
  bool escaped = false;
};

// Integrates the variational system. Stops early when `stop_on_escape` and
// the orbit leaves the cell of the seed.
TrajectoryResult integrate_tangent(const ClassicalState& seed, const LatticeParams& params,
                                   const IntegratorSettings& settings, bool stop_on_escape) {
  const int steps = settings.steps_per_period;
  const double h = kDrivePeriod / steps;
  const double cell_center = std::round(seed.x / kLatticePeriod) * kLatticePeriod;

  // The drive factor only depends on the step phase; tabulate the three
  // stage times of one period.
  std::vector<std::array<double, 3>> drive(steps);
  for (int i = 0; i < steps; ++i) {
    const double t = seed.t + i * h;
    drive[i] = {params.gamma * (1.0 + params.epsilon * std::cos(t)),
                params.gamma * (1.0 + params.epsilon * std::cos(t + 0.5 * h)),
                params.gamma * (1.0 + params.epsilon * std::cos(t + h))};
  }

  Tangent s{seed.x, seed.p, 1.0, 0.0};
  const int half = settings.horizon / 2;
  double log_growth_second_half = 0.0;
  TrajectoryResult result;
  for (int period = 0; period < settings.horizon; ++period) {
    for (int i = 0; i < steps; ++i) {
      const auto& d = drive[i];
      const Tangent k1 = tangent_rhs(s, d[0]);
      const Tangent k2 = tangent_rhs(axpy(s, 0.5 * h, k1), d[1]);
      const Tangent k3 = tangent_rhs(axpy(s, 0.5 * h, k2), d[1]);
      const Tangent k4 = tangent_rhs(axpy(s, h, k3), d[2]);
      s.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
      s.p += h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
      s.dx += h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
      s.dp += h / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
      if (std::abs(s.x - cell_center) >= kPi) result.escaped = true;
    }
    if (result.escaped && stop_on_escape) return result;
    const double norm = std::hypot(s.dx, s.dp);
    if (period >= half) log_growth_second_half += std::log(norm);
    s.dx /= norm;
    s.dp /= norm;
  }
  const int counted = settings.horizon - half;
  result.lyapunov = std::max(0.0, log_growth_second_half / counted);
  return result;
}

}  // namespace

const char* to_string(OrbitLabel label) {
  return label == OrbitLabel::Regular ? "Regular" : "Chaotic";
}

double force(double x, double t, const LatticeParams& params) {
  return -params.gamma * (1.0 + params.epsilon * std::cos(t)) * std::sin(x);
}

double pendulum_energy(const ClassicalState& s, double gamma) {
  return 0.5 * s.p * s.p - gamma * std::cos(s.x);
}

ClassicalState rk4_step(const ClassicalState& s, double dt, const LatticeParams& params) {
  const double t = s.t;
  const double k1x = s.p;
  const double k1p = force(s.x, t, params);
  const double k2x = s.p + 0.5 * dt * k1p;
  const double k2p = force(s.x + 0.5 * dt * k1x, t + 0.5 * dt, params);
  const double k3x = s.p + 0.5 * dt * k2p;
  const double k3p = force(s.x + 0.5 * dt * k2x, t + 0.5 * dt, params);
  const double k4x = s.p + dt * k3p;
  const double k4p = force(s.x + dt * k3x, t + dt, params);
  return {s.x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
          s.p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p), t + dt};
}

ClassicalState stroboscopic_map(ClassicalState state, const LatticeParams& params,
                                int n_periods, int steps_per_period) {
  const double h = kDrivePeriod / steps_per_period;
  const double t0 = state.t;
  for (int period = 0; period < n_periods; ++period) {
    const double start = t0 + period * kDrivePeriod;
    for (int i = 0; i < steps_per_period; ++i) {
      state.t = start + i * h;  // no accumulated drift in the sampling times
      state = rk4_step(state, h, params);
    }
    state.t = start + kDrivePeriod;
  }
  return state;
}

std::vector<std::vector<PortraitPoint>> phase_portrait(std::span<const ClassicalState> seeds,
                                                       int n_periods,
                                                       const LatticeParams& params,
                                                       int steps_per_period) {
  std::vector<std::vector<PortraitPoint>> out(seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(seeds.size()); ++i) {
    ClassicalState s = seeds[i];
    auto& points = out[i];
    points.reserve(n_periods + 1);
    points.push_back({0, reduce_cell(s.x), s.p});
    for (int j = 1; j <= n_periods; ++j) {
      s = stroboscopic_map(s, params, 1, steps_per_period);
      points.push_back({j, reduce_cell(s.x), s.p});
    }
  }
  return out;
}

OrbitClassification classify_orbit(const ClassicalState& seed, const LatticeParams& params,
                                   const IntegratorSettings& settings) {
  const TrajectoryResult r = integrate_tangent(seed, params, settings, false);
  OrbitClassification c;
  c.lyapunov_estimate = r.lyapunov;
  c.escaped_cell = r.escaped;
  c.label = r.lyapunov > settings.chaos_threshold ? OrbitLabel::Chaotic : OrbitLabel::Regular;
  return c;
}

IslandEstimate island_area_estimate(const LatticeParams& params, int resolution_x,
                                    int resolution_p, double p_max,
                                    const IntegratorSettings& settings) {
  if (resolution_x < 2 || resolution_p < 2)
    throw ConfigError("island area needs at least a 2x2 seed grid");
  if (p_max <= 0.0) p_max = 3.0 * std::sqrt(params.gamma * (1.0 + params.epsilon));

  IslandEstimate est;
  est.p_max = p_max;
  est.resolution_x = resolution_x;
  est.resolution_p = resolution_p;
  est.sampled_area = kLatticePeriod * 2.0 * p_max;

  const double hx = kLatticePeriod / resolution_x;
  const double hp = 2.0 * p_max / resolution_p;
  const int total = resolution_x * resolution_p;
  // 1: stays in the cell and Regular, 0 otherwise.
  std::vector<char> bound_regular(total, 0);

  // Seeds sit at cell midpoints, symmetric under (x, p) -> (-x, -p); only the
  // first half is integrated and mirrored.
  const int half = (total + 1) / 2;
#pragma omp parallel for schedule(dynamic)
  for (int idx = 0; idx < half; ++idx) {
    const int ip = idx / resolution_x;
    const int ix = idx % resolution_x;
    const ClassicalState seed{-kPi + (ix + 0.5) * hx, -p_max + (ip + 0.5) * hp, 0.0};
    const TrajectoryResult r = integrate_tangent(seed, params, settings, true);
    const char member = (!r.escaped && r.lyapunov <= settings.chaos_threshold) ? 1 : 0;
    bound_regular[idx] = member;
    bound_regular[total - 1 - idx] = member;
  }

  int n_bound = 0;
  for (char c : bound_regular) n_bound += c;
  est.regular_bound_seeds = n_bound;
  if (n_bound == 0 || n_bound == total)
    throw DegenerateClassification("all " + std::to_string(total) +
                                   " seeds share one label; check the chaos threshold");

  // Flood fill from the seeds adjacent to (0, 0).
  est.island_mask.assign(total, 0);
  std::queue<int> frontier;
  const int cx = resolution_x / 2;
  const int cp = resolution_p / 2;
  for (int dp : {-1, 0}) {
    for (int dx : {-1, 0}) {
      const int ip = (resolution_p % 2 == 0) ? cp + dp : cp;
      const int ix = (resolution_x % 2 == 0) ? cx + dx : cx;
      const int idx = ip * resolution_x + ix;
      if (bound_regular[idx] && !est.island_mask[idx]) {
        est.island_mask[idx] = 1;
        frontier.push(idx);
      }
    }
  }
  while (!frontier.empty()) {
    const int idx = frontier.front();
    frontier.pop();
    const int ip = idx / resolution_x;
    const int ix = idx % resolution_x;
    const std::array<std::array<int, 2>, 4> nbrs{{{ip - 1, ix}, {ip + 1, ix}, {ip, ix - 1}, {ip, ix + 1}}};
    for (const auto& [np, nx] : nbrs) {
      if (np < 0 || np >= resolution_p || nx < 0 || nx >= resolution_x) continue;
      const int n = np * resolution_x + nx;
      if (bound_regular[n] && !est.island_mask[n]) {
        est.island_mask[n] = 1;
        frontier.push(n);
      }
    }
  }
  for (char c : est.island_mask) est.island_seeds += c;
  est.area = est.sampled_area * est.island_seeds / static_cast<double>(total);
  return est;
}

}  // namespace mixedlattice::classical

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mixedlattice/params.hpp"

namespace mixedlattice::classical {

/// Point of the classical phase space. x is never reduced modulo the lattice
/// period so that winding can be detected downstream.
struct ClassicalState {
  double x = 0.0;
  double p = 0.0;
  double t = 0.0;
};

enum class OrbitLabel { Regular, Chaotic };

const char* to_string(OrbitLabel label);

struct OrbitClassification {
  OrbitLabel label = OrbitLabel::Regular;
  /// Finite-time Lyapunov exponent per drive period (>= 0).
  double lyapunov_estimate = 0.0;
  /// True when the raw position left the cell of the seed during the horizon.
  bool escaped_cell = false;
  std::optional<double> island_area;
};

struct IntegratorSettings {
  int steps_per_period = 1000;
  double chaos_threshold = 0.01;
  int horizon = 500;
};

/// dp/dt = -dH/dx = -gamma (1 + epsilon cos t) sin x.
double force(double x, double t, const LatticeParams& params);

/// Undriven pendulum energy p^2/2 - gamma cos x.
double pendulum_energy(const ClassicalState& s, double gamma);

ClassicalState rk4_step(const ClassicalState& state, double dt,
                        const LatticeParams& params);

/// Advances by n_periods drive periods (2 pi each).
ClassicalState stroboscopic_map(ClassicalState state, const LatticeParams& params,
                                int n_periods, int steps_per_period = 1000);

struct PortraitPoint {
  int period_index = 0;
  double x_mod = 0.0;  // reduced into [-pi, pi)
  double p = 0.0;
};

/// Stroboscopic sections for each seed; element 0 is the seed itself.
std::vector<std::vector<PortraitPoint>> phase_portrait(
    std::span<const ClassicalState> seeds, int n_periods,
    const LatticeParams& params, int steps_per_period = 1000);

/// Regular/Chaotic label from tangent-vector growth over the stroboscopic map.
/// The exponent is measured over the second half of the horizon, which
/// removes the linear shear growth of integrable tori.
OrbitClassification classify_orbit(const ClassicalState& seed,
                                   const LatticeParams& params,
                                   const IntegratorSettings& settings = {});

struct IslandEstimate {
  double area = 0.0;
  double sampled_area = 0.0;
  double p_max = 0.0;
  int resolution_x = 0;
  int resolution_p = 0;
  int island_seeds = 0;
  int regular_bound_seeds = 0;
  /// Row-major (p index major) membership mask of the flood-filled island.
  std::vector<char> island_mask;
};

/// Area of the regular island around (0, 0) from a seed grid covering
/// x in [-pi, pi), p in [-p_max, p_max]. A seed counts when it stays in its
/// cell, is labelled Regular, and is 4-connected to the centre. p_max <= 0
/// selects 3 sqrt(gamma (1 + epsilon)).
IslandEstimate island_area_estimate(const LatticeParams& params, int resolution_x,
                                    int resolution_p, double p_max = 0.0,
                                    const IntegratorSettings& settings = {});

}  // namespace mixedlattice::classical

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixedlattice/params.hpp"

namespace mixedlattice {

/// One (gamma, epsilon) point of a statistics sweep.
struct SweepPoint {
  double gamma = 0.2;
  double epsilon = 0.15;
};

/// Flat experiment description shared by every subcommand.
struct ExperimentConfig {
  LatticeParams params;
  int n_cells = 269;
  int n_points_per_cell = 32;
  int beta_fine_samples = 4096;
  int n_periods = 200;
  /// Negative selects (n_cells - 1) / 2.
  int n0 = -1;
  std::string output_dir = "out";
  std::uint64_t seed = 12345;

  // phase portrait
  int portrait_seeds = 24;
  int portrait_periods = 300;
  int island_resolution = 50;
  int lyapunov_horizon = 500;

  // hopping law and statistics
  int hopping_n_lo = 10;
  int hopping_n_hi = 500;
  int stats_n_lo = 100;
  int stats_n_hi = 1000;
  int model_samples = 100000;
  std::vector<SweepPoint> sweep = {{0.2, 0.15}};

  int site0() const { return n0 < 0 ? (n_cells - 1) / 2 : n0; }
  /// Throws ConfigError on violated invariants.
  void validate() const;
  /// Applies the --full scale (N_c = 1079, 1500 Floquet periods).
  void apply_full_scale();
};

/// Sets one key; throws ConfigError on unknown keys or malformed values.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);
/// "key=value" form of set_config_value.
void apply_override(ExperimentConfig& config, const std::string& assignment);

/// Parses key=value lines; '#' starts a comment.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

/// Every key in a fixed order, values with 17 significant digits.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);
/// Single comment line "# key=value key=value ..." carried by every output file.
std::string config_header(const ExperimentConfig& config);
/// Inverse of config_header.
ExperimentConfig config_from_header(const std::string& line);

/// 17 significant digits.
std::string format_double(double v);

}  // namespace mixedlattice

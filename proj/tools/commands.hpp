#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mixedlattice/config.hpp"
#include "mixedlattice/propagator.hpp"

namespace mixedlattice::cli {

enum class DynamicsMode { Exact, Effective, Both };

DynamicsMode parse_dynamics_mode(const std::string& text);

/// State shared by the subcommands of one invocation.
struct Context {
  ExperimentConfig config;
  FloquetCache cache;
  std::ostream& log;

  Context(ExperimentConfig cfg, std::ostream& log_stream);
  std::filesystem::path out(const std::string& name) const;
  /// Writes the cache counters to the log.
  void report_cache() const;
};

/// Each command returns the files it wrote.
std::vector<std::filesystem::path> cmd_phase_portrait(Context& ctx);
std::vector<std::filesystem::path> cmd_band(Context& ctx);
std::vector<std::filesystem::path> cmd_hoppings(Context& ctx);
std::vector<std::filesystem::path> cmd_dynamics(Context& ctx, DynamicsMode mode);
std::vector<std::filesystem::path> cmd_resonances(Context& ctx);
std::vector<std::filesystem::path> cmd_stats(Context& ctx);

/// Runs argv as the mixedlattice executable would and returns its exit code:
/// 0 success, 2 configuration error, 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mixedlattice::cli

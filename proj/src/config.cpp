#include "mixedlattice/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mixedlattice/errors.hpp"

namespace mixedlattice {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
}

template <class Int>
Int to_integer(const std::string& key, const std::string& value) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
  return v;
}

// "g:e,g:e,..."
std::vector<SweepPoint> parse_sweep(const std::string& value) {
  std::vector<SweepPoint> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("sweep entries are gamma:epsilon, got '" + item + "'");
    out.push_back({to_double("sweep", trim(item.substr(0, colon))), to_double("sweep", trim(item.substr(colon + 1)))});
  }
  if (out.empty()) throw ConfigError("sweep needs at least one gamma:epsilon entry");
  return out;
}

std::string format_sweep(const std::vector<SweepPoint>& sweep) {
  std::string s;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (i) s += ',';
    s += format_double(sweep[i].gamma) + ':' + format_double(sweep[i].epsilon);
  }
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  params.validate();
  params.steps_per_floquet();
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(n_cells, "n_cells");
  positive(n_points_per_cell, "n_points_per_cell");
  positive(beta_fine_samples, "beta_fine_samples");
  positive(n_periods, "n_periods");
  positive(portrait_seeds, "portrait_seeds");
  positive(portrait_periods, "portrait_periods");
  positive(model_samples, "model_samples");
  if (n_points_per_cell % 2 != 0) throw ConfigError("n_points_per_cell must be even");
  if (site0() >= n_cells) throw ConfigError("n0 must be below n_cells");
  if (island_resolution < 50) throw ConfigError("island_resolution must be at least 50");
  if (lyapunov_horizon < 100) throw ConfigError("lyapunov_horizon must be at least 100");
  if (hopping_n_lo < 1 || hopping_n_hi <= hopping_n_lo) throw ConfigError("need 1 <= hopping_n_lo < hopping_n_hi");
  if (stats_n_lo < 1 || stats_n_hi <= stats_n_lo) throw ConfigError("need 1 <= stats_n_lo < stats_n_hi");
  if (output_dir.empty() || output_dir.find_first_of(" \t\n") != std::string::npos)
    throw ConfigError("output_dir must be nonempty and free of whitespace");
  for (const auto& point : sweep) {
    LatticeParams p = params;
    p.gamma = point.gamma;
    p.epsilon = point.epsilon;
    p.validate();
  }
}

void ExperimentConfig::apply_full_scale() {
  n_cells = 1079;
  n_periods = 1500;
  n0 = -1;
}

void set_config_value(ExperimentConfig& c, const std::string& key_raw, const std::string& value_raw) {
  const std::string key = trim(key_raw), value = trim(value_raw);
  if (key == "gamma") c.params.gamma = to_double(key, value);
  else if (key == "epsilon") c.params.epsilon = to_double(key, value);
  else if (key == "heff") c.params.heff = to_double(key, value);
  else if (key == "dt") c.params.dt = to_double(key, value);
  else if (key == "floquet_periods") c.params.floquet_periods = to_integer<int>(key, value);
  else if (key == "n_cells") c.n_cells = to_integer<int>(key, value);
  else if (key == "n_points_per_cell") c.n_points_per_cell = to_integer<int>(key, value);
  else if (key == "beta_fine_samples") c.beta_fine_samples = to_integer<int>(key, value);
  else if (key == "n_periods") c.n_periods = to_integer<int>(key, value);
  else if (key == "n0") c.n0 = to_integer<int>(key, value);
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "seed") c.seed = to_integer<std::uint64_t>(key, value);
  else if (key == "portrait_seeds") c.portrait_seeds = to_integer<int>(key, value);
  else if (key == "portrait_periods") c.portrait_periods = to_integer<int>(key, value);
  else if (key == "island_resolution") c.island_resolution = to_integer<int>(key, value);
  else if (key == "lyapunov_horizon") c.lyapunov_horizon = to_integer<int>(key, value);
  else if (key == "hopping_n_lo") c.hopping_n_lo = to_integer<int>(key, value);
  else if (key == "hopping_n_hi") c.hopping_n_hi = to_integer<int>(key, value);
  else if (key == "stats_n_lo") c.stats_n_lo = to_integer<int>(key, value);
  else if (key == "stats_n_hi") c.stats_n_hi = to_integer<int>(key, value);
  else if (key == "model_samples") c.model_samples = to_integer<int>(key, value);
  else if (key == "sweep") c.sweep = parse_sweep(value);
  else throw ConfigError("unknown key '" + key + "'");
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.find('=') == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected key=value");
    apply_override(base, line);
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
  return {
      {"gamma", format_double(c.params.gamma)},
      {"epsilon", format_double(c.params.epsilon)},
      {"heff", format_double(c.params.heff)},
      {"dt", format_double(c.params.dt)},
      {"floquet_periods", std::to_string(c.params.floquet_periods)},
      {"n_cells", std::to_string(c.n_cells)},
      {"n_points_per_cell", std::to_string(c.n_points_per_cell)},
      {"beta_fine_samples", std::to_string(c.beta_fine_samples)},
      {"n_periods", std::to_string(c.n_periods)},
      {"n0", std::to_string(c.n0)},
      {"output_dir", c.output_dir},
      {"seed", std::to_string(c.seed)},
      {"portrait_seeds", std::to_string(c.portrait_seeds)},
      {"portrait_periods", std::to_string(c.portrait_periods)},
      {"island_resolution", std::to_string(c.island_resolution)},
      {"lyapunov_horizon", std::to_string(c.lyapunov_horizon)},
      {"hopping_n_lo", std::to_string(c.hopping_n_lo)},
      {"hopping_n_hi", std::to_string(c.hopping_n_hi)},
      {"stats_n_lo", std::to_string(c.stats_n_lo)},
      {"stats_n_hi", std::to_string(c.stats_n_hi)},
      {"model_samples", std::to_string(c.model_samples)},
      {"sweep", format_sweep(c.sweep)},
  };
}

std::string config_header(const ExperimentConfig& config) {
  std::string line = "#";
  for (const auto& [k, v] : config_entries(config)) line += ' ' + k + '=' + v;
  return line;
}

ExperimentConfig config_from_header(const std::string& line) {
  std::string body = trim(line);
  if (body.empty() || body[0] != '#') throw ConfigError("header line must start with '#'");
  std::istringstream in(body.substr(1));
  ExperimentConfig c;
  std::string token;
  while (in >> token) apply_override(c, token);
  return c;
}

}  // namespace mixedlattice

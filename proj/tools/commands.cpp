#include "commands.hpp"

#include <cmath>
#include <cstdlib>
#include <ostream>

#include "CLI11.hpp"
#include "mixedlattice/classical.hpp"
#include "mixedlattice/errors.hpp"
#include "mixedlattice/resonance.hpp"
#include "output.hpp"

namespace mixedlattice::cli {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path cache_directory(const ExperimentConfig& config) {
  if (const char* env = std::getenv("MIXEDLATTICE_CACHE"); env != nullptr && *env != '\0') return env;
  return fs::path(config.output_dir) / "cache";
}

BandOptions band_options(const Context& ctx) {
  BandOptions o;
  o.n_points_per_cell = ctx.config.n_points_per_cell;
  o.cache = &ctx.cache;
  return o;
}

LatticeParams sweep_params(const ExperimentConfig& config, const SweepPoint& point) {
  LatticeParams p = config.params;
  p.gamma = point.gamma;
  p.epsilon = point.epsilon;
  return p;
}

// Fine band of the configured parameters, reused from band.csv when present.
BlochBand fine_band(Context& ctx, const LatticeParams& params) {
  ExperimentConfig probe = ctx.config;
  probe.params = params;
  if (auto stored = read_band_csv(ctx.out("band.csv"), probe)) {
    ctx.log << "band: reusing " << ctx.out("band.csv").string() << '\n';
    return *stored;
  }
  const auto betas = canonical_betas(ctx.config.beta_fine_samples);
  ctx.log << "band: " << betas.size() << " quasi-momenta at gamma=" << params.gamma
          << " epsilon=" << params.epsilon << '\n';
  return extract_effective_band(params, betas, band_options(ctx));
}

std::vector<std::string> site_columns(const std::string& first, int n_cells) {
  std::vector<std::string> cols = {first, "dn2", "pch"};
  for (int n = 0; n < n_cells; ++n) cols.push_back("p_" + std::to_string(n));
  return cols;
}

fs::path write_dynamics(const Context& ctx, const std::string& name, const DynamicsRecord& rec) {
  const int n_cells = rec.site_probabilities.empty() ? 0 : static_cast<int>(rec.site_probabilities[0].size());
  CsvWriter csv(ctx.out(name), ctx.config, site_columns("time", n_cells));
  for (std::size_t s = 0; s < rec.times.size(); ++s) {
    std::vector<double> row = {rec.times[s], rec.spread[s],
                               rec.chaotic_fraction.empty() ? std::nan("") : rec.chaotic_fraction[s]};
    row.insert(row.end(), rec.site_probabilities[s].begin(), rec.site_probabilities[s].end());
    csv.row(row);
  }
  return csv.path();
}

}  // namespace

DynamicsMode parse_dynamics_mode(const std::string& text) {
  if (text == "exact") return DynamicsMode::Exact;
  if (text == "effective") return DynamicsMode::Effective;
  if (text == "both") return DynamicsMode::Both;
  throw ConfigError("dynamics mode must be exact, effective or both, got '" + text + "'");
}

Context::Context(ExperimentConfig cfg, std::ostream& log_stream)
    : config(std::move(cfg)), cache(cache_directory(config)), log(log_stream) {}

fs::path Context::out(const std::string& name) const { return fs::path(config.output_dir) / name; }

void Context::report_cache() const {
  log << "floquet-cache hits=" << cache.hits() << " misses=" << cache.misses()
      << " dir=" << cache.directory().string() << '\n';
}

// ---------------------------------------------------------------- commands

std::vector<fs::path> cmd_phase_portrait(Context& ctx) {
  const auto& cfg = ctx.config;
  const LatticeParams& params = cfg.params;
  const double p_max = 3.0 * std::sqrt(params.gamma * (1.0 + params.epsilon));
  // Half the seeds along p at x = 0, half along x just above p = 0.
  std::vector<classical::ClassicalState> seeds;
  const int half = std::max(1, cfg.portrait_seeds / 2);
  for (int k = 0; k < half; ++k) seeds.push_back({0.0, p_max * (k + 0.5) / half, 0.0});
  for (int k = 0; k < cfg.portrait_seeds - half; ++k)
    seeds.push_back({kPi * (k + 0.5) / (cfg.portrait_seeds - half), 0.01, 0.0});

  const auto portrait = classical::phase_portrait(seeds, cfg.portrait_periods, params);
  CsvWriter pc(ctx.out("portrait.csv"), cfg, {"seed_id", "period_index", "x_mod", "p"});
  for (std::size_t s = 0; s < portrait.size(); ++s)
    for (const auto& pt : portrait[s]) pc.row({static_cast<double>(s), static_cast<double>(pt.period_index), pt.x_mod, pt.p});

  classical::IntegratorSettings settings;
  settings.horizon = cfg.lyapunov_horizon;
  std::vector<classical::OrbitClassification> labels(seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < static_cast<int>(seeds.size()); ++s) labels[s] = classical::classify_orbit(seeds[s], params, settings);
  CsvWriter cc(ctx.out("classification.csv"), cfg, {"seed_x", "seed_p", "label", "lyapunov"});
  for (std::size_t s = 0; s < seeds.size(); ++s)
    cc.text_row({format_double(seeds[s].x), format_double(seeds[s].p), classical::to_string(labels[s].label),
                 format_double(labels[s].lyapunov_estimate)});

  const auto island = classical::island_area_estimate(params, cfg.island_resolution, cfg.island_resolution, 0.0, settings);
  ordered_json j;
  j["island_area"] = island.area;
  j["separatrix_area"] = 16.0 * std::sqrt(params.gamma);
  j["sampled_area"] = island.sampled_area;
  j["p_max"] = island.p_max;
  j["resolution_x"] = island.resolution_x;
  j["resolution_p"] = island.resolution_p;
  j["island_seeds"] = island.island_seeds;
  j["heff"] = params.heff;
  j["heff_below_area"] = params.heff < island.area;
  write_json(ctx.out("island.json"), cfg, j);
  ctx.log << "phase-portrait: island area " << island.area << " (separatrix " << 16.0 * std::sqrt(params.gamma) << ")\n";
  return {pc.path(), cc.path(), ctx.out("island.json")};
}

std::vector<fs::path> cmd_band(Context& ctx) {
  const auto betas = canonical_betas(ctx.config.beta_fine_samples);
  ctx.log << "band: " << betas.size() << " quasi-momenta\n";
  const BlochBand band = extract_effective_band(ctx.config.params, betas, band_options(ctx));
  write_band_csv(ctx.out("band.csv"), ctx.config, band);
  ctx.report_cache();
  return {ctx.out("band.csv")};
}

std::vector<fs::path> cmd_hoppings(Context& ctx) {
  const BlochBand band = fine_band(ctx, ctx.config.params);
  const EffectiveModel model = hoppings_from_band(band);
  CsvWriter csv(ctx.out("hoppings.csv"), ctx.config, {"n", "re_t", "im_t", "abs_t"});
  for (int n = 0; n < model.n_sites(); ++n) {
    const Complex t = model.hoppings[n];
    csv.row({static_cast<double>(n), t.real(), t.imag(), std::abs(t)});
  }
  ctx.log << "hoppings: |t_2|/|t_1| = " << std::abs(model.hoppings[2]) / std::abs(model.hoppings[1])
          << ", hermiticity defect " << model.hermiticity_defect() << '\n';
  ctx.report_cache();
  return {csv.path()};
}

std::vector<fs::path> cmd_dynamics(Context& ctx, DynamicsMode mode) {
  const auto& cfg = ctx.config;
  const int n0 = cfg.site0();
  std::vector<fs::path> files;
  std::optional<DynamicsRecord> exact, effective;

  if (mode != DynamicsMode::Exact) {
    const auto betas = canonical_betas(cfg.n_cells);
    const BlochBand band = extract_effective_band(cfg.params, betas, band_options(ctx));
    const EffectiveModel model = hoppings_from_band(band);
    ctx.log << "dynamics: effective model on " << cfg.n_cells << " sites\n";
    effective = run_effective_dynamics(model, n0, cfg.n_periods);
    files.push_back(write_dynamics(ctx, "dynamics_effective.csv", *effective));
  }
  if (mode != DynamicsMode::Effective) {
    const Grid grid(cfg.n_cells, cfg.n_points_per_cell, cfg.params.heff);
    const WannierBasis basis = wannier_states(cfg.params, grid, &ctx.cache);
    ctx.log << "dynamics: split-step run on " << grid.size() << " points for " << cfg.n_periods << " periods\n";
    exact = run_exact_dynamics(cfg.params, grid, n0, cfg.n_periods, basis);
    files.push_back(write_dynamics(ctx, "dynamics_exact.csv", *exact));
  }
  if (mode == DynamicsMode::Both) {
    const DynamicsComparison cmp = compare_dynamics(*exact, *effective);
    CsvWriter csv(ctx.out("comparison.csv"), cfg, {"time", "l1", "dn2_rel_err"});
    for (std::size_t s = 0; s < cmp.times.size(); ++s) csv.row({cmp.times[s], cmp.l1[s], cmp.spread_relative_error[s]});
    files.push_back(csv.path());
    double max_pch = 0.0;
    for (double v : exact->chaotic_fraction) max_pch = std::max(max_pch, v);
    ordered_json j;
    j["max_l1"] = cmp.max_l1;
    j["max_pch"] = max_pch;
    j["final_dn2_exact"] = exact->spread.back();
    j["final_dn2_effective"] = effective->spread.back();
    write_json(ctx.out("comparison.json"), cfg, j);
    files.push_back(ctx.out("comparison.json"));
    ctx.log << "dynamics: max L1 " << cmp.max_l1 << ", max P_ch " << max_pch << '\n';
  }
  ctx.report_cache();
  return files;
}

std::vector<fs::path> cmd_resonances(Context& ctx) {
  const auto& cfg = ctx.config;
  const BlochBand band = fine_band(ctx, cfg.params);
  const SpectrumSource source = floquet_spectrum_source(cfg.params, band_options(ctx));
  const auto resonances = detect_resonances(band, &source);
  CsvWriter rc(ctx.out("resonances.csv"), cfg, {"beta0", "w", "alpha", "width", "fit_residual"});
  for (const auto& r : resonances) rc.row({r.beta0, r.w, r.alpha, r.width, r.fit_residual});

  const EffectiveModel model = hoppings_from_band(band);
  const int n_hi = std::min(cfg.hopping_n_hi, model.n_sites() / 2);
  ordered_json j;
  j["n_resonances"] = resonances.size();
  if (!resonances.empty()) {
    const auto resonance_sum = asymptotic_hoppings(resonances, 1, model.n_sites() / 2);
    const double typical = typical_amplitude(resonances);
    CsvWriter hc(ctx.out("hopping_law.csv"), cfg, {"n", "abs_t_ft", "abs_t_resonances", "typical"});
    for (int n = 1; n <= model.n_sites() / 2; ++n)
      hc.row({static_cast<double>(n), std::abs(model.hoppings[n]), std::abs(resonance_sum[n - 1]), typical / n});
    std::vector<Complex> ft(model.hoppings.data() + cfg.hopping_n_lo, model.hoppings.data() + n_hi + 1);
    std::vector<Complex> law(resonance_sum.begin() + (cfg.hopping_n_lo - 1), resonance_sum.begin() + n_hi);
    const RabiReport rabi = rabi_validity(resonances, model);
    j["slope"] = hopping_slope(model.hoppings, cfg.hopping_n_lo, n_hi);
    j["typical_ratio"] = typical_ratio(law, ft);
    j["typical_amplitude"] = typical;
    j["rabi_valid"] = rabi.valid;
    j["slowest_rabi_period"] = rabi.slowest_rabi_period;
    j["fastest_tunneling_time"] = rabi.fastest_tunneling_time;
    j["fastest_n"] = rabi.fastest_n;
    ordered_json list = ordered_json::array();
    for (const auto& r : resonances) list.push_back({{"beta0", r.beta0}, {"w", r.w}, {"alpha", r.alpha}, {"width", r.width}, {"sharp", r.sharp()}});
    j["resonances"] = list;
  }
  write_json(ctx.out("resonances.json"), cfg, j);
  ctx.log << "resonances: " << resonances.size() << " found\n";
  ctx.report_cache();
  std::vector<fs::path> files = {rc.path(), ctx.out("resonances.json")};
  if (!resonances.empty()) files.push_back(ctx.out("hopping_law.csv"));
  return files;
}

std::vector<fs::path> cmd_stats(Context& ctx) {
  const auto& cfg = ctx.config;
  FluctuationOptions opts;
  opts.n_lo = cfg.stats_n_lo;
  opts.n_hi = cfg.stats_n_hi;
  opts.model_samples = cfg.model_samples;
  opts.seed = cfg.seed;

  std::vector<FluctuationSeries> series;
  ordered_json per_set = ordered_json::array();
  CsvWriter samples(ctx.out("stats_samples.csv"), cfg, {"set", "n", "n_abs_t"});
  for (std::size_t s = 0; s < cfg.sweep.size(); ++s) {
    const LatticeParams params = sweep_params(cfg, cfg.sweep[s]);
    const BlochBand band = fine_band(ctx, params);
    const SpectrumSource source = floquet_spectrum_source(params, band_options(ctx));
    const auto resonances = detect_resonances(band, &source);
    if (resonances.empty()) throw WindowTooSmall("no resonances at gamma=" + format_double(params.gamma) + " epsilon=" + format_double(params.epsilon));
    std::vector<double> fitted_w;
    for (const auto& r : resonances) fitted_w.push_back(r.w);
    FluctuationSeries fs_entry{hoppings_from_band(band).hoppings, static_cast<int>(resonances.size()), true, fitted_w};
    const int hi = std::min<int>(opts.n_hi, fs_entry.hoppings.size() / 2);
    for (int n = opts.n_lo; n < hi; ++n) samples.row({static_cast<double>(s), static_cast<double>(n), n * std::abs(fs_entry.hoppings[n])});
    FluctuationOptions one = opts;
    one.seed = opts.seed + s;
    const FluctuationStatistics st = fluctuation_statistics(std::span(&fs_entry, 1), one);
    one.model = CouplingModel::Fitted;
    const FluctuationStatistics fit_st = fluctuation_statistics(std::span(&fs_entry, 1), one);
    per_set.push_back({{"gamma", params.gamma}, {"epsilon", params.epsilon}, {"n_resonances", resonances.size()},
                       {"ks_distance", st.ks_distance}, {"critical_value", st.critical_value},
                       {"fitted_model_ks_distance", fit_st.ks_distance},
                       {"n_samples", st.n_samples}, {"verdict", st.universal ? "universal" : "rejected"}});
    series.push_back(std::move(fs_entry));
  }
  const FluctuationStatistics pooled = fluctuation_statistics(series, opts);
  CsvWriter hist(ctx.out("stats_histogram.csv"), cfg, {"bin_center", "density"});
  for (std::size_t b = 0; b < pooled.bin_centers.size(); ++b) hist.row({pooled.bin_centers[b], pooled.density[b]});
  ordered_json j;
  j["ks_distance"] = pooled.ks_distance;
  j["critical_value"] = pooled.critical_value;
  j["n_samples"] = pooled.n_samples;
  j["verdict"] = pooled.universal ? "universal" : "rejected";
  FluctuationOptions fitted_opts = opts;
  fitted_opts.model = CouplingModel::Fitted;
  j["fitted_model_ks_distance"] = fluctuation_statistics(series, fitted_opts).ks_distance;
  j["per_set"] = per_set;
  write_json(ctx.out("stats.json"), cfg, j);
  ctx.log << "stats: KS " << pooled.ks_distance << " vs critical " << pooled.critical_value << '\n';
  ctx.report_cache();
  return {samples.path(), hist.path(), ctx.out("stats.json")};
}

// ---------------------------------------------------------------- entry point

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Driven lattice simulations: classical maps, Floquet bands, effective hoppings"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::vector<std::string> overrides;
  bool full = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::string mode = "both";
  app.add_option("--config", config_path, "flat key=value configuration file");
  app.add_option("--set", overrides, "override one key (repeatable)");
  app.add_flag("--full", full, "large run: N_c=1079, 1500 Floquet periods");
  app.add_option("--seed", seed, "Monte-Carlo seed");
  app.add_option("--out", out_dir, "output directory");
  auto* portrait = app.add_subcommand("phase-portrait", "stroboscopic sections, orbit labels, island area");
  auto* band = app.add_subcommand("band", "effective regular band on the fine quasi-momentum mesh");
  auto* hoppings = app.add_subcommand("hoppings", "hoppings from the fine band");
  auto* dynamics = app.add_subcommand("dynamics", "exact and/or effective spreading of a Wannier state");
  dynamics->add_option("mode", mode, "exact|effective|both")->capture_default_str();
  auto* resonances = app.add_subcommand("resonances", "avoided crossings and the asymptotic hopping law");
  auto* stats = app.add_subcommand("stats", "fluctuation statistics over the configured sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    if (full) config.apply_full_scale();
    for (const auto& o : overrides) apply_override(config, o);
    if (seed) config.seed = *seed;
    if (out_dir) config.output_dir = *out_dir;
    config.validate();
    fs::create_directories(config.output_dir);

    Context ctx(config, err);
    std::vector<fs::path> files;
    if (*portrait) files = cmd_phase_portrait(ctx);
    else if (*band) files = cmd_band(ctx);
    else if (*hoppings) files = cmd_hoppings(ctx);
    else if (*dynamics) files = cmd_dynamics(ctx, parse_dynamics_mode(mode));
    else if (*resonances) files = cmd_resonances(ctx);
    else if (*stats) files = cmd_stats(ctx);
    for (const auto& f : files) out << f.string() << '\n';
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_config_error() ? 2 : 3;
  } catch (const fs::filesystem_error& e) {
    err << "error: ConfigError: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace mixedlattice::cli

#include "output.hpp"

#include <sstream>

#include "mixedlattice/errors.hpp"

namespace mixedlattice::cli {

CsvWriter::CsvWriter(const std::filesystem::path& path, const ExperimentConfig& config,
                     const std::vector<std::string>& columns)
    : path_(path), n_columns_(columns.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path);
  if (!out_) throw ConfigError("cannot write " + path.string());
  out_ << config_header(config) << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  text_row(cells);
}

void CsvWriter::text_row(const std::vector<std::string>& cells) {
  if (cells.size() != n_columns_) throw ShapeMismatch("row width differs from header in " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << '\n';
}

void write_json(const std::filesystem::path& path, const ExperimentConfig& config,
                nlohmann::ordered_json body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  nlohmann::ordered_json doc;
  doc["header"] = config_header(config);
  for (auto& [k, v] : body.items()) doc[k] = v;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void write_band_csv(const std::filesystem::path& path, const ExperimentConfig& config,
                    const BlochBand& band) {
  CsvWriter csv(path, config, {"beta", "energy", "overlap", "branch_flag"});
  for (int i = 0; i < band.size(); ++i)
    csv.row({band.betas[i], band.energies[i], band.overlaps[i], static_cast<double>(band.branch_flags[i])});
}

std::optional<BlochBand> read_band_csv(const std::filesystem::path& path,
                                       const ExperimentConfig& config) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  ExperimentConfig stored;
  try {
    stored = config_from_header(line);
  } catch (const ConfigError&) {
    return std::nullopt;
  }
  const auto& a = stored.params;
  const auto& b = config.params;
  if (a.gamma != b.gamma || a.epsilon != b.epsilon || a.heff != b.heff || a.dt != b.dt ||
      a.floquet_periods != b.floquet_periods || stored.n_points_per_cell != config.n_points_per_cell ||
      stored.beta_fine_samples != config.beta_fine_samples)
    return std::nullopt;
  std::getline(in, line);  // column names
  BlochBand band;
  band.heff = b.heff;
  band.floquet_time = b.floquet_time();
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 4) return std::nullopt;
    band.betas.push_back(v[0]);
    band.energies.push_back(v[1]);
    band.overlaps.push_back(v[2]);
    band.branch_flags.push_back(static_cast<int>(v[3]));
  }
  if (band.size() != config.beta_fine_samples) return std::nullopt;
  return band;
}

}  // namespace mixedlattice::cli

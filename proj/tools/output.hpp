#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mixedlattice/band.hpp"
#include "mixedlattice/config.hpp"

namespace mixedlattice::cli {

/// Single writer of one CSV file: parameter header comment, column names, rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const ExperimentConfig& config,
            const std::vector<std::string>& columns);

  void row(const std::vector<double>& values);
  /// Cells already formatted.
  void text_row(const std::vector<std::string>& cells);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t n_columns_;
};

void write_json(const std::filesystem::path& path, const ExperimentConfig& config,
                nlohmann::ordered_json body);

void write_band_csv(const std::filesystem::path& path, const ExperimentConfig& config,
                    const BlochBand& band);

/// Band stored by write_band_csv when its header describes the same band
/// (lattice parameters, N_p and sample count); empty otherwise.
std::optional<BlochBand> read_band_csv(const std::filesystem::path& path,
                                       const ExperimentConfig& config);

}  // namespace mixedlattice::cli

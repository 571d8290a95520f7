#pragma once

// Pipeline configuration: line-oriented `key = value` text with [section]
// headers and '#' comments.
//
//   [pipeline]   n_sites, master_seed, workers, out
//   [dataset]    scale, k, boundary, realizations, max_dimension
//   [grids]      delocalized_h, mbl_h, unlabeled_h, epsilon
//   [baseline]   h, epsilon, realizations, window
//   [train]      learning_rate, batch_size, max_epochs, dropout, lambda,
//                lambda_warmup_epochs, stability_threshold, seed,
//                bn_momentum, bn_epsilon, adversary, threads
//   [predict]    h, epsilon, realizations
//   [collapse]   h_c_min, h_c_max, h_c_step, nu_min, nu_max, nu_step,
//                error_factor, band_lo, band_hi
//
// Lists are comma separated ("8, 10, 12") or ranges "start:stop:step" with
// stop included.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mbl/dataset.hpp"
#include "mbl/nn/trainer.hpp"
#include "mbl/scaling.hpp"

namespace mbl {

/// Raw parsed file: section -> key -> value.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text);
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  const std::string& get(const std::string& section, const std::string& key) const;
  std::vector<std::string> keys(const std::string& section) const;
  std::vector<std::string> sections() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
};

double parse_double(std::string_view text);
std::uint64_t parse_u64(std::string_view text);
bool parse_bool(std::string_view text);
/// Comma list or "start:stop:step" range.
std::vector<double> parse_list(std::string_view text);

struct BaselineSettings {
  std::vector<double> h = arithmetic_grid(0.5, 0.5, 16);
  std::vector<double> epsilon = arithmetic_grid(0.05, 0.05, 19);
  std::uint32_t realizations = 20;
  double window = 0.05;  // half-width of the epsilon window
};

struct PredictSettings {
  std::vector<double> h = arithmetic_grid(0.25, 0.25, 32);
  std::vector<double> epsilon = arithmetic_grid(0.05, 0.05, 19);
  std::uint32_t realizations = 50;
};

struct PipelineConfig {
  std::vector<int> n_sites{8, 10, 12};
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
  std::filesystem::path out = "results";

  double scale = 1.0;
  std::size_t k = 50;
  Boundary boundary = Boundary::periodic;
  std::optional<std::uint32_t> realizations;
  std::size_t max_dimension = kDefaultMaxDimension;
  DatasetGrids grids = DatasetGrids::appendix();

  BaselineSettings baseline;
  nn::TrainConfig train;
  PredictSettings predict;
  CollapseGrid collapse;
  Band band;

  /// Throws ConfigError on violated invariants.
  void validate() const;
  BuildOptions build_options(int n) const;
};

/// Unknown sections or keys are rejected so typos do not pass silently.
PipelineConfig pipeline_config(const ConfigFile& file);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Canonical text form; parsing it yields an equal configuration.
std::string to_text(const PipelineConfig& cfg);

}  // namespace mbl

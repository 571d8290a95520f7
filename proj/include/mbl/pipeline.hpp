#pragma once

// Subcommand implementations. Every command reads its inputs from and writes
// its outputs under cfg.out; completed artifacts are skipped unless forced.
//
//   data/labeled_N{N}.mbls, data/unlabeled_N{N}.mbls (+ .manifest)   generate
//   baseline/gap_ratio_N{N}.csv, baseline/gap_ratio_N{N}.svg         baseline
//   models/dann_N{N}.ckpt, logs/train_N{N}.csv                       train
//   predictions.csv                                                  predict
//   boundary.csv                                                     collapse
//   figures/phase_diagram_N{N}.svg, figures/collapse_eps{e}.svg      report

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mbl/config.hpp"
#include "mbl/dann.hpp"
#include "mbl/scaling.hpp"

namespace mbl {

/// Seed-stream tags, kept apart from the dataset's source tags 1..3.
inline constexpr std::uint64_t kPredictTag = 4;
inline constexpr std::uint64_t kBaselineTag = 5;

struct PhaseCell {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;  // contributing realizations; 0 marks a missing cell
};

/// Values on a rectangular (epsilon x h) grid, stored row-major by epsilon.
struct PhaseDiagram {
  int n_sites = 0;
  std::vector<double> h;
  std::vector<double> epsilon;
  std::vector<PhaseCell> cells;

  const PhaseCell& at(std::size_t i_eps, std::size_t i_h) const { return cells[i_eps * h.size() + i_h]; }
  /// Columns: n_sites,h,epsilon,mean,std,n (mean and std empty when missing).
  std::string to_csv() const;
};

struct Paths {
  std::filesystem::path root;

  std::filesystem::path labeled(int n) const;
  std::filesystem::path unlabeled(int n) const;
  std::filesystem::path baseline_csv(int n) const;
  std::filesystem::path baseline_svg(int n) const;
  std::filesystem::path checkpoint(int n) const;
  std::filesystem::path train_log(int n) const;
  std::filesystem::path predictions() const;
  std::filesystem::path boundary() const;
  std::filesystem::path phase_figure(int n) const;
  std::filesystem::path collapse_figure(double epsilon) const;
};

struct RunOptions {
  bool force = false;
  std::ostream* log = nullptr;  // progress lines; nullptr for silence
};

/// Mean gap ratio per (epsilon, h) cell over cfg.baseline.realizations
/// disorder draws. Cells with too few levels in every draw are missing.
PhaseDiagram gap_ratio_diagram(const PipelineConfig& cfg, int n_sites);

/// One sample per (epsilon, h, realization): p_mbl averaged over the k states
/// nearest each target epsilon.
std::vector<Sample> prediction_samples(const DannModel& model, const PipelineConfig& cfg, int n_sites);

/// Writes `content` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Parses the curve CSV written by predict.
std::vector<AveragedCurve> read_curves_csv(const std::filesystem::path& path);

void cmd_generate(const PipelineConfig& cfg, const RunOptions& run = {});
void cmd_baseline(const PipelineConfig& cfg, const RunOptions& run = {});
void cmd_train(const PipelineConfig& cfg, const RunOptions& run = {});
void cmd_predict(const PipelineConfig& cfg, const RunOptions& run = {});
void cmd_collapse(const PipelineConfig& cfg, const RunOptions& run = {});
void cmd_report(const PipelineConfig& cfg, const RunOptions& run = {});

}  // namespace mbl

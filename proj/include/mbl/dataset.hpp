#pragma once

// Labeled (deep-in-phase) and unlabeled (boundary-spanning) eigenstate sets,
// and their on-disk record format.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mbl/errors.hpp"
#include "mbl/spectrum.hpp"
#include "mbl/spin_chain.hpp"

namespace mbl {

enum class DomainTag : std::uint8_t { labeled = 0, unlabeled = 1 };
enum class Phase : std::uint8_t { delocalized = 0, mbl = 1 };
enum class SetKind : std::uint8_t { labeled = 0, unlabeled = 1 };

struct EigenstateRecord {
  int n_sites = 0;
  double h = 0.0;
  double epsilon_target = 0.0;
  double epsilon_actual = 0.0;
  double energy = 0.0;
  std::uint64_t seed = 0;  // disorder seed of the realization
  std::vector<float> coefficients;
  DomainTag domain = DomainTag::labeled;
  std::optional<Phase> phase;

  bool operator==(const EigenstateRecord&) const = default;
};

/// Parameter grids. Defaults reproduce the appendix grids: delocalized
/// h = 0.10..0.50 (0.05), MBL h = 7.0..8.0 (0.1), unlabeled h = 0.5..6.9 (0.2),
/// epsilon = 0.05..0.95 (0.05).
struct DatasetGrids {
  std::vector<double> delocalized_h;
  std::vector<double> mbl_h;
  std::vector<double> unlabeled_h;
  std::vector<double> epsilon;

  static DatasetGrids appendix();
};

/// start, start + step, ... (count values), rounded to 1e-9 so grid values
/// print and compare cleanly.
std::vector<double> arithmetic_grid(double start, double step, std::size_t count);

struct DatasetManifest {
  SetKind kind = SetKind::labeled;
  int n_sites = 0;
  Boundary boundary = Boundary::periodic;
  std::uint64_t master_seed = 0;
  std::uint32_t k = 50;
  /// Realizations per grid point of the reference grid (delocalized grid for
  /// the labeled set; the MBL class receives the same number of rows).
  std::uint32_t realizations = 0;
  std::vector<double> epsilon;
  std::vector<double> h_primary;    // delocalized h (labeled) or unlabeled h
  std::vector<double> h_secondary;  // MBL h (labeled); empty for unlabeled
  std::uint64_t n_delocalized = 0;
  std::uint64_t n_mbl = 0;
  std::uint64_t n_unlabeled = 0;
  std::uint64_t payload_offset = 0;
  std::uint64_t record_bytes = 0;

  std::uint64_t total() const noexcept { return n_delocalized + n_mbl + n_unlabeled; }
  bool operator==(const DatasetManifest&) const = default;
};

struct Dataset {
  std::vector<EigenstateRecord> records;
  DatasetManifest manifest;
};

struct BuildOptions {
  int n_sites = 12;
  /// Uniformly scales realizations per grid point. 1 targets 50k records per
  /// labeled class and 50k unlabeled records.
  double scale = 1.0;
  std::uint64_t master_seed = 0;
  std::size_t k = 50;
  Boundary boundary = Boundary::periodic;
  std::size_t max_dimension = kDefaultMaxDimension;
  unsigned workers = 1;
  DatasetGrids grids = DatasetGrids::appendix();
  /// When set, overrides the scale-derived realizations per grid point.
  std::optional<std::uint32_t> realizations;
};

inline constexpr double kRecordsPerSetAtFullScale = 50000.0;

std::uint32_t labeled_realizations(const BuildOptions& options);
std::uint32_t unlabeled_realizations(const BuildOptions& options);

/// Rows (h value x realization) assigned to each MBL h value so that the MBL
/// class has exactly `total_rows` rows spread as evenly as possible.
std::vector<std::uint32_t> spread_rows(std::uint32_t total_rows, std::size_t n_values);

Dataset build_labeled_set(const BuildOptions& options);
Dataset build_unlabeled_set(const BuildOptions& options);

/// Flips the global sign so the largest-magnitude component (lowest index on
/// ties) is positive.
template <typename T>
std::vector<T> sign_fix(std::span<const T> v) {
  if (v.empty()) throw InvalidArgument("sign_fix of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] == T(0)) throw InvalidArgument("sign_fix of a zero vector");
  std::vector<T> out(v.begin(), v.end());
  if (v[best] < T(0))
    for (T& x : out) x = -x;
  return out;
}

/// Binary record file: "MBLS", u16 version, header, packed little-endian
/// records with float32 coefficients. A text manifest is written next to it
/// at `manifest_path(path)`.
void save_records(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_records(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& records_path);
std::string manifest_text(const DatasetManifest& manifest);

inline constexpr std::uint16_t kRecordFormatVersion = 1;

}  // namespace mbl

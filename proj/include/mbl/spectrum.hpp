#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mbl/spin_chain.hpp"

namespace mbl {

/// Wigner-Dyson (GOE) limit of the mean adjacent gap ratio.
inline constexpr double kGapRatioWignerDyson = 0.53;
/// Poisson limit of the mean adjacent gap ratio (2 ln 2 - 1 = 0.386...).
inline constexpr double kGapRatioPoisson = 0.38;

inline constexpr std::size_t kDefaultMaxDimension = 3432;  // binomial(14, 7)

struct SpectrumResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // column k pairs with eigenvalues[k]; empty when values-only
  double e_min = 0.0;
  double e_max = 0.0;

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
  bool has_vectors() const noexcept { return eigenvectors.size() > 0; }
};

struct DiagonalizeOptions {
  std::size_t max_dimension = kDefaultMaxDimension;
  bool compute_vectors = true;
};

/// Full symmetric eigendecomposition of the sector Hamiltonian.
/// Throws CapacityError above the dimension cap and InvalidArgument for
/// non-symmetric input.
SpectrumResult diagonalize(const SparseHamiltonian& hamiltonian, const DiagonalizeOptions& options = {});

/// Position of `e` between the extremal energies, in [0, 1].
double normalized_energy(double e, double e_min, double e_max);

struct SelectedState {
  std::size_t index = 0;  // position in the ascending spectrum
  double energy = 0.0;
  double epsilon = 0.0;
  Eigen::VectorXd vector;  // empty when the spectrum carries no vectors
};

/// The k states whose normalized energy is closest to epsilon_target, ordered
/// by distance (ties by lower index).
std::vector<SelectedState> select_states(const SpectrumResult& spectrum, double epsilon_target, std::size_t k = 50);

struct EnergyWindow {
  double lo = 0.0;
  double hi = 1.0;
};

struct GapRatioStat {
  double r_mean = 0.0;
  std::size_t n_gaps = 0;     // ratio pairs entering the mean
  std::size_t n_skipped = 0;  // pairs with both gaps zero
  EnergyWindow window;
};

/// Mean of min(d_n, d_{n+1}) / max(d_n, d_{n+1}) over consecutive gaps of
/// the levels whose normalized energy lies in `window` (inclusive).
GapRatioStat gap_ratio(const SpectrumResult& spectrum, EnergyWindow window);

/// Same statistic over an ascending list of levels, all of which are used.
GapRatioStat gap_ratio(std::span<const double> sorted_levels);

/// Window of +/- half_width around epsilon, clipped to [0, 1].
EnergyWindow window_around(double epsilon, double half_width = 0.05);

}  // namespace mbl

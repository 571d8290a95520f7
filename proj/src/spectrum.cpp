#include "mbl/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mbl/errors.hpp"

namespace mbl {

SpectrumResult diagonalize(const SparseHamiltonian& hamiltonian, const DiagonalizeOptions& options) {
  const std::size_t n = hamiltonian.dim;
  if (n > options.max_dimension)
    throw CapacityError("dimension " + std::to_string(n) + " exceeds solver cap " +
                        std::to_string(options.max_dimension));
  if (n == 0) throw InvalidArgument("empty Hamiltonian");

  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : hamiltonian.entries) {
    if (e.row >= n || e.col >= n) throw InvalidArgument("entry outside matrix bounds");
    dense(e.row, e.col) += e.value;
  }
  for (Eigen::Index r = 0; r < dense.rows(); ++r)
    for (Eigen::Index c = r + 1; c < dense.cols(); ++c)
      if (dense(r, c) != dense(c, r))
        throw InvalidArgument("Hamiltonian is not symmetric at (" + std::to_string(r) + ", " + std::to_string(c) + ")");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      dense, options.compute_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigensolver did not converge");

  SpectrumResult result;
  result.eigenvalues = solver.eigenvalues();
  if (options.compute_vectors) result.eigenvectors = solver.eigenvectors();
  result.e_min = result.eigenvalues(0);
  result.e_max = result.eigenvalues(result.eigenvalues.size() - 1);
  return result;
}

double normalized_energy(double e, double e_min, double e_max) {
  if (!(e_max > e_min)) throw DegenerateSpectrum("degenerate spectrum: e_min == e_max");
  return (e - e_min) / (e_max - e_min);
}

std::vector<SelectedState> select_states(const SpectrumResult& spectrum, double epsilon_target, std::size_t k) {
  const std::size_t n = spectrum.dimension();
  if (k > n) throw InvalidArgument("requested " + std::to_string(k) + " states from a spectrum of " + std::to_string(n));
  if (!(epsilon_target >= 0.0 && epsilon_target <= 1.0)) throw InvalidArgument("epsilon target outside [0, 1]");

  std::vector<double> eps(n);
  for (std::size_t i = 0; i < n; ++i)
    eps[i] = normalized_energy(spectrum.eigenvalues(static_cast<Eigen::Index>(i)), spectrum.e_min, spectrum.e_max);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(eps[a] - epsilon_target) < std::abs(eps[b] - epsilon_target);
  });

  std::vector<SelectedState> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t idx = order[i];
    SelectedState s;
    s.index = idx;
    s.energy = spectrum.eigenvalues(static_cast<Eigen::Index>(idx));
    s.epsilon = eps[idx];
    if (spectrum.has_vectors()) s.vector = spectrum.eigenvectors.col(static_cast<Eigen::Index>(idx));
    out.push_back(std::move(s));
  }
  return out;
}

GapRatioStat gap_ratio(std::span<const double> levels) {
  if (levels.size() < 3)
    throw InsufficientLevels("gap ratio needs at least 3 levels, got " + std::to_string(levels.size()));
  GapRatioStat stat;
  double sum = 0.0;
  for (std::size_t i = 0; i + 2 < levels.size(); ++i) {
    const double d1 = levels[i + 1] - levels[i];
    const double d2 = levels[i + 2] - levels[i + 1];
    const double hi = std::max(d1, d2);
    if (hi == 0.0) {
      ++stat.n_skipped;
      continue;
    }
    sum += std::min(d1, d2) / hi;
    ++stat.n_gaps;
  }
  stat.r_mean = stat.n_gaps > 0 ? sum / static_cast<double>(stat.n_gaps) : 0.0;
  return stat;
}

GapRatioStat gap_ratio(const SpectrumResult& spectrum, EnergyWindow window) {
  std::vector<double> inside;
  for (Eigen::Index i = 0; i < spectrum.eigenvalues.size(); ++i) {
    const double e = spectrum.eigenvalues(i);
    const double eps = normalized_energy(e, spectrum.e_min, spectrum.e_max);
    if (eps >= window.lo && eps <= window.hi) inside.push_back(e);
  }
  GapRatioStat stat = gap_ratio(inside);
  stat.window = window;
  return stat;
}

EnergyWindow window_around(double epsilon, double half_width) {
  return {std::max(0.0, epsilon - half_width), std::min(1.0, epsilon + half_width)};
}

}  // namespace mbl

#pragma once

// Reference implementations used only by tests. They share no code with the
// library beyond plain data types.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
using CMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic>;

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Single-site operators in the basis (|down>, |up>) = (bit 0, bit 1).
inline CMatrix pauli(char which) {
  CMatrix m(2, 2);
  const cd i(0.0, 1.0);
  switch (which) {
    case 'x': m << 0.0, 1.0, 1.0, 0.0; break;
    case 'y': m << 0.0, i, -i, 0.0; break;   // sigma_y with rows/cols ordered (down, up)
    case 'z': m << -1.0, 0.0, 0.0, 1.0; break;
    default: m << 1.0, 0.0, 0.0, 1.0;
  }
  return m;
}

/// Operator acting with `ops[site]` on each site; site i is bit i of the
/// basis index, so site 0 is the rightmost Kronecker factor.
inline CMatrix site_product(int n, const std::vector<std::pair<int, char>>& ops) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (int site = n - 1; site >= 0; --site) {
    char which = 'i';
    for (auto [s, w] : ops)
      if (s == site) which = w;
    out = kron(out, pauli(which));
  }
  return out;
}

/// H = 1/2 sum_bonds sigma_i . sigma_j - sum_i h_i sigma^z_i on the full 2^N space.
inline CMatrix full_heisenberg(int n, const std::vector<double>& fields, bool periodic) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  CMatrix h = CMatrix::Zero(dim, dim);
  for (int i = 0; i < n; ++i) h += -fields[static_cast<std::size_t>(i)] * site_product(n, {{i, 'z'}});
  std::vector<std::pair<int, int>> bonds;
  for (int i = 0; i + 1 < n; ++i) bonds.emplace_back(i, i + 1);
  if (periodic) bonds.emplace_back(n - 1, 0);
  for (auto [i, j] : bonds) {
    const CMatrix b = site_product(n, {{i, 'x'}, {j, 'x'}}) + site_product(n, {{i, 'y'}, {j, 'y'}}) +
                      site_product(n, {{i, 'z'}, {j, 'z'}});
    h += 0.5 * b;
  }
  return h;
}

inline std::vector<std::uint32_t> zero_magnetization_masks(int n) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t m = 0; m < (1u << n); ++m)
    if (__builtin_popcount(m) == n / 2) out.push_back(m);
  return out;
}

/// Mean consecutive-gap ratio over an ascending level list, skipping 0/0.
inline double gap_ratio(const std::vector<double>& levels) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + 2 < levels.size(); ++i) {
    const double a = levels[i + 1] - levels[i], b = levels[i + 2] - levels[i + 1];
    if (a == 0.0 && b == 0.0) continue;
    sum += std::min(a, b) / std::max(a, b);
    ++count;
  }
  return sum / static_cast<double>(count);
}

/// Central differences of a scalar function of a parameter vector.
inline std::vector<double> numeric_gradient(const std::function<double()>& f, std::vector<double>& x,
                                            double step = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f();
    x[i] = keep - step;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return v;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace oracle

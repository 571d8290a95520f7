#include "mbl/spin_chain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "mbl/errors.hpp"
#include "mbl/rng.hpp"

namespace mbl {

const char* to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "open"; }

Boundary parse_boundary(std::string_view text) {
  if (text == "periodic") return Boundary::periodic;
  if (text == "open") return Boundary::open;
  throw InvalidArgument("unknown boundary condition '" + std::string(text) + "'");
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

std::optional<std::size_t> SpinBasis::index_of(std::uint32_t mask) const {
  auto it = std::lower_bound(states_.begin(), states_.end(), mask);
  if (it == states_.end() || *it != mask) return std::nullopt;
  return static_cast<std::size_t>(it - states_.begin());
}

SpinBasis enumerate_basis(int n_sites, int max_sites) {
  if (n_sites < 2 || n_sites > max_sites || n_sites % 2 != 0 || n_sites > 30)
    throw InvalidArgument("n_sites must be even and in [2, " + std::to_string(max_sites) + "], got " +
                          std::to_string(n_sites));
  SpinBasis basis;
  basis.n_sites_ = n_sites;
  basis.states_.reserve(binomial(n_sites, n_sites / 2));
  // Gosper's hack walks all masks with n/2 bits set in increasing order.
  std::uint32_t v = (1u << (n_sites / 2)) - 1u;
  const std::uint32_t limit = 1u << n_sites;
  while (v < limit) {
    basis.states_.push_back(v);
    const std::uint32_t t = v | (v - 1u);
    v = (t + 1u) | (((~t & -~t) - 1u) >> (std::countr_zero(v) + 1));
  }
  return basis;
}

DisorderRealization sample_disorder(double h, int n_sites, std::uint64_t seed) {
  if (!(h >= 0.0) || !std::isfinite(h)) throw InvalidArgument("disorder strength must be finite and >= 0");
  if (n_sites < 0) throw InvalidArgument("n_sites must be non-negative");
  DisorderRealization d;
  d.strength = h;
  d.seed = seed;
  d.fields.resize(static_cast<std::size_t>(n_sites));
  CounterRng rng(seed);
  for (double& f : d.fields) f = h * (2.0 * rng.uniform() - 1.0);
  return d;
}

std::vector<double> SparseHamiltonian::dense() const {
  std::vector<double> m(dim * dim, 0.0);
  for (const auto& e : entries) m[static_cast<std::size_t>(e.row) * dim + e.col] += e.value;
  return m;
}

double SparseHamiltonian::max_row_sum_norm() const {
  std::vector<double> rows(dim, 0.0);
  for (const auto& e : entries) rows[e.row] += std::abs(e.value);
  return rows.empty() ? 0.0 : *std::max_element(rows.begin(), rows.end());
}

SparseHamiltonian build_hamiltonian(const SpinBasis& basis, const DisorderRealization& disorder, Boundary boundary) {
  const int n = basis.n_sites();
  if (static_cast<int>(disorder.fields.size()) != n)
    throw InvalidArgument("disorder has " + std::to_string(disorder.fields.size()) + " fields for " +
                          std::to_string(n) + " sites");

  std::vector<std::pair<int, int>> bonds;
  for (int i = 0; i + 1 < n; ++i) bonds.emplace_back(i, i + 1);
  if (boundary == Boundary::periodic) bonds.emplace_back(n - 1, 0);

  SparseHamiltonian ham;
  ham.dim = basis.dimension();
  ham.boundary = boundary;

  std::vector<std::pair<std::uint32_t, double>> row;
  for (std::size_t r = 0; r < basis.dimension(); ++r) {
    const std::uint32_t mask = basis.state(r);
    const auto spin = [mask](int i) { return (mask >> i) & 1u ? 1.0 : -1.0; };

    double diag = 0.0;
    for (int i = 0; i < n; ++i) diag -= disorder.fields[static_cast<std::size_t>(i)] * spin(i);

    row.clear();
    for (auto [i, j] : bonds) {
      diag += 0.5 * spin(i) * spin(j);
      if (spin(i) != spin(j)) {
        const std::uint32_t flipped = mask ^ ((1u << i) | (1u << j));
        row.emplace_back(static_cast<std::uint32_t>(*basis.index_of(flipped)), 1.0);
      }
    }
    row.emplace_back(static_cast<std::uint32_t>(r), diag);

    // N = 2 periodic visits the same pair twice; merge repeated columns.
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < row.size();) {
      double v = 0.0;
      std::size_t m = k;
      for (; m < row.size() && row[m].first == row[k].first; ++m) v += row[m].second;
      ham.entries.push_back({static_cast<std::uint32_t>(r), row[k].first, v});
      k = m;
    }
  }
  return ham;
}

}  // namespace mbl

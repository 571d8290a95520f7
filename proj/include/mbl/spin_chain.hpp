#pragma once

// Zero-magnetization sector of the random-field Heisenberg chain
//
//   H = 1/2 sum_i sigma_i . sigma_{i+1} - sum_i h_i sigma^z_i,
//
// with h_i uniform in [-h, h].

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mbl {

inline constexpr int kDefaultMaxSites = 16;

enum class Boundary { periodic, open };

const char* to_string(Boundary b);
Boundary parse_boundary(const std::string_view text);

/// Computational basis of the Sz = 0 sector. Bit i of a mask is set when the
/// spin at site i points up.
class SpinBasis {
 public:
  int n_sites() const noexcept { return n_sites_; }
  std::size_t dimension() const noexcept { return states_.size(); }
  std::span<const std::uint32_t> states() const noexcept { return states_; }
  std::uint32_t state(std::size_t k) const { return states_.at(k); }

  /// Position of `mask` in the basis, or nullopt when it lies outside the sector.
  std::optional<std::size_t> index_of(std::uint32_t mask) const;

 private:
  friend SpinBasis enumerate_basis(int n_sites, int max_sites);
  int n_sites_ = 0;
  std::vector<std::uint32_t> states_;
};

/// Throws InvalidArgument for odd n_sites or n_sites outside [2, max_sites].
SpinBasis enumerate_basis(int n_sites, int max_sites = kDefaultMaxSites);

std::uint64_t binomial(int n, int k);

struct DisorderRealization {
  double strength = 0.0;
  std::vector<double> fields;
  std::uint64_t seed = 0;
};

/// Draws n_sites fields uniformly from [-h, h]. Pure in (h, n_sites, seed).
DisorderRealization sample_disorder(double h, int n_sites, std::uint64_t seed);

/// Coordinate-list sparse matrix. One entry per (row, col); diagonal always present.
struct SparseHamiltonian {
  struct Entry {
    std::uint32_t row;
    std::uint32_t col;
    double value;
  };

  std::size_t dim = 0;
  std::vector<Entry> entries;
  Boundary boundary = Boundary::periodic;

  /// Row-major dense copy.
  std::vector<double> dense() const;
  /// max_r sum_c |H_rc|
  double max_row_sum_norm() const;
};

SparseHamiltonian build_hamiltonian(const SpinBasis& basis, const DisorderRealization& disorder,
                                    Boundary boundary = Boundary::periodic);

}  // namespace mbl

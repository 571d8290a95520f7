#include <random>

#include "doctest.h"
#include "mbl/errors.hpp"
#include "mbl/spectrum.hpp"
#include "mbl/spin_chain.hpp"
#include "oracles.hpp"

using namespace mbl;

namespace {

SparseHamiltonian from_rows(const std::vector<std::vector<double>>& m) {
  SparseHamiltonian h;
  h.dim = m.size();
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m.size(); ++c)
      if (m[r][c] != 0.0 || r == c)
        h.entries.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), m[r][c]});
  return h;
}

SparseHamiltonian diagonal(const std::vector<double>& d) {
  std::vector<std::vector<double>> m(d.size(), std::vector<double>(d.size(), 0.0));
  for (std::size_t i = 0; i < d.size(); ++i) m[i][i] = d[i];
  return from_rows(m);
}

SpectrumResult levels(std::vector<double> e) {
  SpectrumResult s;
  s.eigenvalues = Eigen::Map<Eigen::VectorXd>(e.data(), static_cast<Eigen::Index>(e.size()));
  s.e_min = e.front();
  s.e_max = e.back();
  return s;
}

}  // namespace

TEST_CASE("analytic two-by-two block") {
  const auto s = diagonalize(from_rows({{-0.5, 1.0}, {1.0, -0.5}}));
  CHECK(s.eigenvalues[0] == doctest::Approx(-1.5).epsilon(1e-14));
  CHECK(s.eigenvalues[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.e_min == s.eigenvalues[0]);
  CHECK(s.e_max == s.eigenvalues[1]);
}

TEST_CASE("identity matrix") {
  const auto s = diagonalize(diagonal(std::vector<double>(6, 1.0)));
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(s.eigenvalues[i] == doctest::Approx(1.0));
  const Eigen::MatrixXd gram = s.eigenvectors.transpose() * s.eigenvectors;
  CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eigen-decomposition invariants and reconstruction") {
  const auto basis = enumerate_basis(10);
  const auto ham = build_hamiltonian(basis, sample_disorder(1.0, 10, 3), Boundary::periodic);
  const auto s = diagonalize(ham);
  const auto dense = ham.dense();
  const auto n = static_cast<Eigen::Index>(ham.dim);
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) h(r, c) = dense[static_cast<std::size_t>(r * n + c)];

  const double norm = ham.max_row_sum_norm();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k > 0) CHECK(s.eigenvalues[k] >= s.eigenvalues[k - 1]);
    CHECK(std::abs(s.eigenvectors.col(k).norm() - 1.0) < 1e-10);
    CHECK((h * s.eigenvectors.col(k) - s.eigenvalues[k] * s.eigenvectors.col(k)).norm() <= 1e-8 * norm);
  }
  const Eigen::MatrixXd rebuilt = s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.transpose();
  CHECK((rebuilt - h).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("values-only mode agrees with the full solve") {
  const auto ham = build_hamiltonian(enumerate_basis(8), sample_disorder(2.0, 8, 4), Boundary::periodic);
  const auto full = diagonalize(ham);
  const auto values = diagonalize(ham, {kDefaultMaxDimension, false});
  CHECK_FALSE(values.has_vectors());
  CHECK((full.eigenvalues - values.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("diagonalize errors") {
  const auto ham = build_hamiltonian(enumerate_basis(8), sample_disorder(1.0, 8, 1), Boundary::periodic);
  CHECK_THROWS_AS(diagonalize(ham, {50, true}), CapacityError);
  CHECK_THROWS_AS(diagonalize(from_rows({{1.0, 2.0}, {0.5, 1.0}})), InvalidArgument);
}

TEST_CASE("normalized energy") {
  CHECK(normalized_energy(-2.0, -2.0, 6.0) == 0.0);
  CHECK(normalized_energy(6.0, -2.0, 6.0) == 1.0);
  CHECK(normalized_energy(2.0, -2.0, 6.0) == 0.5);
  CHECK_THROWS_AS(normalized_energy(1.0, 1.0, 1.0), DegenerateSpectrum);
}

TEST_CASE("state selection") {
  const auto s = diagonalize(diagonal({0, 1, 2, 3, 4, 10}));
  SUBCASE("hand-evaluated distances") {
    const auto sel = select_states(s, 0.5, 2);
    REQUIRE(sel.size() == 2);
    CHECK(sel[0].energy == doctest::Approx(4.0));
    CHECK(sel[0].epsilon == doctest::Approx(0.4));
    CHECK(sel[1].energy == doctest::Approx(3.0));
  }
  SUBCASE("k equal to the dimension returns everything") {
    const auto sel = select_states(s, 0.3, 6);
    std::vector<std::size_t> idx;
    for (const auto& x : sel) idx.push_back(x.index);
    std::sort(idx.begin(), idx.end());
    CHECK(idx == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  }
  SUBCASE("ground state at epsilon 0") {
    const auto sel = select_states(s, 0.0, 1);
    CHECK(sel[0].index == 0);
    CHECK(sel[0].vector.size() == 6);
  }
  SUBCASE("ties go to the lower index") {
    const auto t = levels({0, 1, 3, 4});
    const auto sel = select_states(t, 0.5, 2);
    CHECK(sel[0].index == 1);
    CHECK(sel[1].index == 2);
  }
  SUBCASE("independent of eigenvector signs") {
    auto flipped = s;
    flipped.eigenvectors = -flipped.eigenvectors;
    const auto a = select_states(s, 0.7, 3), b = select_states(flipped, 0.7, 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(a[i].index == b[i].index);
  }
  CHECK_THROWS_AS(select_states(s, 0.5, 7), InvalidArgument);
}

TEST_CASE("gap ratio") {
  SUBCASE("equally spaced levels") {
    const auto g = gap_ratio(levels({0, 1, 2, 3, 4}), {0.0, 1.0});
    CHECK(g.r_mean == doctest::Approx(1.0));
    CHECK(g.n_gaps == 3);
  }
  SUBCASE("window is inclusive and counts levels by normalized energy") {
    const auto g = gap_ratio(levels({0, 1, 3, 4, 10}), {0.0, 0.4});
    CHECK(g.n_gaps == 2);
    CHECK(g.r_mean == doctest::Approx((0.5 + 0.5) / 2));
  }
  SUBCASE("degenerate pairs are skipped") {
    const std::vector<double> l{0, 1, 1, 1, 2};
    const auto g = gap_ratio(std::span<const double>(l));
    CHECK(g.n_skipped == 1);
    CHECK(g.n_gaps == 2);
    CHECK(g.r_mean == 0.0);
  }
  SUBCASE("too few levels") {
    CHECK_THROWS_AS(gap_ratio(levels({0, 1, 2, 3, 4}), {0.0, 0.3}), InsufficientLevels);
  }
  SUBCASE("affine invariance") {
    std::mt19937_64 gen(3);
    auto l = oracle::random_vector(200, gen, 0.0, 10.0);
    std::sort(l.begin(), l.end());
    std::vector<double> m;
    for (double x : l) m.push_back(3.5 * x - 2.0);
    const auto a = gap_ratio(std::span<const double>(l)), b = gap_ratio(std::span<const double>(m));
    CHECK(a.r_mean == doctest::Approx(b.r_mean).epsilon(1e-12));
    CHECK(a.r_mean == doctest::Approx(oracle::gap_ratio(l)).epsilon(1e-12));
  }
  SUBCASE("Poisson levels") {
    // Analytic value 2 ln 2 - 1 for i.i.d. exponential gaps.
    std::mt19937_64 gen(2024);
    std::exponential_distribution<double> gap(1.0);
    std::vector<double> l{0.0};
    for (int i = 0; i < 100000; ++i) l.push_back(l.back() + gap(gen));
    const auto g = gap_ratio(std::span<const double>(l));
    CHECK(std::abs(g.r_mean - (2 * std::log(2.0) - 1)) < 0.005);
    CHECK(std::abs(g.r_mean - kGapRatioPoisson) < 0.01);
  }
}

TEST_CASE("window around epsilon") {
  const auto w = window_around(0.5);
  CHECK(w.lo == doctest::Approx(0.45));
  CHECK(w.hi == doctest::Approx(0.55));
  CHECK(window_around(0.02).lo == 0.0);
  CHECK(window_around(0.98, 0.1).hi == 1.0);
}

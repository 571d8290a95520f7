#include <bit>
#include <map>
#include <set>

#include "doctest.h"
#include "mbl/errors.hpp"
#include "mbl/rng.hpp"
#include "mbl/spectrum.hpp"
#include "mbl/spin_chain.hpp"
#include "oracles.hpp"

using namespace mbl;

TEST_CASE("basis dimensions and ordering") {
  const auto b2 = enumerate_basis(2);
  CHECK(b2.dimension() == 2);
  CHECK(b2.state(0) == 0b01);
  CHECK(b2.state(1) == 0b10);
  CHECK(enumerate_basis(4).dimension() == 6);
  CHECK(enumerate_basis(12).dimension() == 924);

  for (int n : {2, 4, 6, 8, 10, 12}) {
    const auto b = enumerate_basis(n);
    CHECK(b.dimension() == binomial(n, n / 2));
    for (std::size_t k = 0; k < b.dimension(); ++k) {
      CHECK(std::popcount(b.state(k)) == n / 2);
      if (k > 0) CHECK(b.state(k) > b.state(k - 1));
      CHECK(*b.index_of(b.state(k)) == k);
    }
  }
  CHECK_FALSE(enumerate_basis(4).index_of(0b0111).has_value());
}

TEST_CASE("basis rejects odd or out-of-range sizes") {
  CHECK_THROWS_AS(enumerate_basis(3), InvalidArgument);
  CHECK_THROWS_AS(enumerate_basis(0), InvalidArgument);
  CHECK_THROWS_AS(enumerate_basis(18), InvalidArgument);
  CHECK(enumerate_basis(18, 18).dimension() == 48620);
}

TEST_CASE("disorder sampling") {
  SUBCASE("zero strength gives zero fields") {
    for (std::uint64_t seed : {0ull, 1ull, 99ull})
      for (double f : sample_disorder(0.0, 10, seed).fields) CHECK(f == 0.0);
  }
  SUBCASE("pure function of its inputs") {
    const auto a = sample_disorder(1.0, 12, 7), b = sample_disorder(1.0, 12, 7);
    CHECK(a.fields == b.fields);
    CHECK(a.seed == 7);
    CHECK(sample_disorder(1.0, 12, 8).fields != a.fields);
  }
  SUBCASE("fields bounded by strength") {
    for (std::uint64_t s = 0; s < 100; ++s)
      for (double f : sample_disorder(3.0, 8, s).fields) CHECK(std::abs(f) <= 3.0);
  }
  SUBCASE("moments of the uniform distribution") {
    // 10^5 draws: 10^4 realizations of 10 sites.
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::uint64_t s = 0; s < 10000; ++s)
      for (double f : sample_disorder(2.0, 10, derive_seed(123, {s})).fields) {
        sum += f;
        sq += f * f;
        ++n;
      }
    const double mean = sum / static_cast<double>(n);
    const double var = sq / static_cast<double>(n) - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 4.0 / 3.0) < 0.05);
  }
  SUBCASE("invalid strength") {
    CHECK_THROWS_AS(sample_disorder(-0.1, 4, 1), InvalidArgument);
    CHECK_THROWS_AS(sample_disorder(std::nan(""), 4, 1), InvalidArgument);
  }
}

TEST_CASE("two-site block") {
  const auto basis = enumerate_basis(2);
  const auto ham = build_hamiltonian(basis, sample_disorder(0.0, 2, 1), Boundary::open);
  const auto d = ham.dense();
  CHECK(d[0] == -0.5);
  CHECK(d[1] == 1.0);
  CHECK(d[2] == 1.0);
  CHECK(d[3] == -0.5);
  CHECK(d[0] + d[3] == -1.0);
  const auto spec = diagonalize(ham);
  CHECK(spec.eigenvalues[0] == doctest::Approx(-1.5));
  CHECK(spec.eigenvalues[1] == doctest::Approx(0.5));
}

TEST_CASE("field length must match the basis") {
  CHECK_THROWS_AS(build_hamiltonian(enumerate_basis(4), sample_disorder(1.0, 6, 1), Boundary::periodic),
                  InvalidArgument);
}

TEST_CASE("structural invariants of the sector matrix") {
  for (auto boundary : {Boundary::periodic, Boundary::open})
    for (int n : {2, 4, 6, 8, 10}) {
      const auto basis = enumerate_basis(n);
      const auto ham = build_hamiltonian(basis, sample_disorder(2.5, n, 11), boundary);
      std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
      std::map<std::pair<std::uint32_t, std::uint32_t>, double> value;
      std::size_t diagonals = 0;
      for (const auto& e : ham.entries) {
        CHECK(seen.insert({e.row, e.col}).second);
        value[{e.row, e.col}] = e.value;
        diagonals += e.row == e.col;
        CHECK(std::popcount(basis.state(e.row)) == std::popcount(basis.state(e.col)));
      }
      CHECK(diagonals == basis.dimension());
      for (const auto& [rc, v] : value) {
        const auto it = value.find({rc.second, rc.first});
        REQUIRE(it != value.end());
        CHECK(it->second == v);
      }
    }
}

TEST_CASE("sector matrix equals the projected full-space Pauli Hamiltonian") {
  std::mt19937_64 gen(5);
  for (int n : {4, 6}) {
    for (bool periodic : {true, false}) {
      const auto dis = sample_disorder(1.7, n, gen());
      const auto full = oracle::full_heisenberg(n, dis.fields, periodic);
      const auto basis = enumerate_basis(n);
      const auto dense =
          build_hamiltonian(basis, dis, periodic ? Boundary::periodic : Boundary::open).dense();
      const auto dim = basis.dimension();
      for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) {
          const auto ref = full(basis.state(r), basis.state(c));
          CHECK(ref.imag() == 0.0);
          CHECK(dense[r * dim + c] == ref.real());
        }
    }
  }
}

TEST_CASE("four-site ground state matches the full-space spectrum") {
  const std::vector<double> zero(4, 0.0);
  const auto full = oracle::full_heisenberg(4, zero, true);
  Eigen::SelfAdjointEigenSolver<oracle::CMatrix> es(full);
  // The Sz = 0 sector contains the singlet ground state of the ring.
  const auto spec = diagonalize(build_hamiltonian(enumerate_basis(4), sample_disorder(0.0, 4, 0), Boundary::periodic));
  CHECK(spec.eigenvalues[0] == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-12));
  CHECK(spec.eigenvalues[0] == doctest::Approx(-4.0));
}

TEST_CASE("boundary names") {
  CHECK(parse_boundary("periodic") == Boundary::periodic);
  CHECK(parse_boundary("open") == Boundary::open);
  CHECK(std::string(to_string(Boundary::open)) == "open");
  CHECK_THROWS_AS(parse_boundary("twisted"), InvalidArgument);
}

#include <algorithm>
#include <random>

#include "doctest.h"
#include "mbl/errors.hpp"
#include "mbl/scaling.hpp"
#include "oracles.hpp"

using namespace mbl;

namespace {

AveragedCurve make_curve(int n, double lo, double hi, double step, const std::function<double(double)>& f) {
  AveragedCurve c;
  c.n_sites = n;
  c.epsilon = 0.5;
  const auto count = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= count; ++i) {
    const double h = lo + step * i;
    c.points.push_back({h, f(h), 0.0, 1});
  }
  return c;
}

std::vector<AveragedCurve> logistic_family(double h_c, double nu, double sigma, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<AveragedCurve> out;
  for (int n : {8, 10, 12})
    out.push_back(make_curve(n, 2.0, 5.0, 0.05, [&](double h) {
      const double y = oracle::logistic(std::pow(n, 1.0 / nu) * (h - h_c));
      return sigma > 0 ? y + noise(gen) : y;
    }));
  return out;
}

}  // namespace

TEST_CASE("disorder average of one point") {
  const std::vector<double> two{0.4, 0.6};
  const auto p = average_point(1.0, two);
  CHECK(p.mean == doctest::Approx(0.5));
  CHECK(p.std == doctest::Approx(std::sqrt(0.02)));
  CHECK(p.std == doctest::Approx(0.1414).epsilon(1e-3));
  CHECK(p.n == 2);
  CHECK(p.has_band());

  const std::vector<double> same(7, 0.3);
  CHECK(average_point(0.0, same).std == 0.0);

  const std::vector<double> one{0.8};
  const auto single = average_point(2.0, one);
  CHECK(single.mean == 0.8);
  CHECK_FALSE(single.has_band());

  std::mt19937_64 gen(4);
  auto v = oracle::random_vector(31, gen);
  const auto a = average_point(0.0, v);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(v.begin(), v.end(), gen);
    const auto b = average_point(0.0, v);
    CHECK(a.mean == b.mean);
    CHECK(a.std == b.std);
  }
  const auto empty = average_point(0.0, std::span<const double>{});
  CHECK(empty.n == 0);
  CHECK_FALSE(empty.has_band());
}

TEST_CASE("grouping samples into curves") {
  const std::vector<Sample> s{{10, 0.5, 2.0, 0.4}, {8, 0.5, 1.0, 0.1}, {8, 0.5, 2.0, 0.3},
                              {8, 0.5, 1.0, 0.3}, {8, 0.2, 1.0, 1.0}, {10, 0.5, 2.0, 0.6}};
  const auto curves = disorder_average(s);
  REQUIRE(curves.size() == 3);
  CHECK(curves[0].n_sites == 8);
  CHECK(curves[0].epsilon == 0.2);
  CHECK(curves[1].n_sites == 8);
  REQUIRE(curves[1].points.size() == 2);
  CHECK(curves[1].points[0].h == 1.0);
  CHECK(curves[1].points[0].mean == doctest::Approx(0.2));
  CHECK(curves[1].points[0].n == 2);
  CHECK(curves[2].points[0].mean == doctest::Approx(0.5));
  const auto csv = curves_csv(curves);
  CHECK(csv.rfind("n_sites,epsilon,h,mean,std,n\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("collapse quality") {
  const auto f = [](double h) { return oracle::logistic(h - 3.0); };
  SUBCASE("coincident curves") {
    const std::vector<AveragedCurve> c{make_curve(10, 1, 5, 0.25, f), make_curve(10, 1, 5, 0.25, f)};
    for (double h_c : {1.0, 3.0, 4.2})
      for (double nu : {0.7, 1.6}) CHECK(collapse_quality(c, h_c, nu) == 0.0);
  }
  SUBCASE("disjoint scaled ranges") {
    const std::vector<AveragedCurve> c{make_curve(10, 0, 1, 0.5, f), make_curve(10, 5, 6, 0.5, f)};
    CHECK_THROWS_AS(collapse_quality(c, 3.0, 1.0), NoOverlap);
    CHECK_THROWS_AS(collapse_fit(c), NoOverlap);
  }
  SUBCASE("exact scaling form") {
    const auto c = logistic_family(3.5, 1.6, 0.0, 0);
    const double at_truth = collapse_quality(c, 3.5, 1.6);
    CHECK(at_truth < 1e-5);
    CHECK(collapse_quality(c, 3.0, 1.6) > 100 * at_truth);
    CHECK(collapse_quality(c, 3.5, 0.8) > 100 * at_truth);
  }
}

TEST_CASE("collapse fit recovers synthetic parameters") {
  SUBCASE("noisy") {
    const auto r = collapse_fit(logistic_family(3.5, 1.6, 0.01, 11));
    CHECK(std::abs(r.h_c - 3.5) <= 0.1);
    CHECK(std::abs(r.nu - 1.6) <= 0.2);
    CHECK(r.h_c_err > 0.0);
    CHECK(r.nu_err > 0.0);
    CHECK(r.evaluated > 0);
  }
  SUBCASE("noise free") {
    const auto r = collapse_fit(logistic_family(3.5, 1.6, 0.0, 0));
    CHECK(r.quality <= 1e-6);
    CHECK(std::abs(r.h_c - 3.5) <= 0.02);
    CHECK(std::abs(r.nu - 1.6) <= 0.05);
  }
  SUBCASE("worker count does not change the result") {
    const auto c = logistic_family(2.7, 1.2, 0.01, 3);
    CollapseGrid g;
    const auto a = collapse_fit(c, g);
    g.workers = 3;
    const auto b = collapse_fit(c, g);
    CHECK(a.h_c == b.h_c);
    CHECK(a.nu == b.nu);
    CHECK(a.quality == b.quality);
  }
  SUBCASE("grid minimum is not beaten by any grid point") {
    const auto c = logistic_family(3.5, 1.6, 0.01, 12);
    CollapseGrid g;
    g.h_c_min = 3.0;
    g.h_c_max = 4.0;
    g.nu_min = 1.0;
    g.nu_max = 2.0;
    const auto r = collapse_fit(c, g);
    for (double h = g.h_c_min; h <= g.h_c_max + 1e-9; h += g.h_c_step)
      for (double nu = g.nu_min; nu <= g.nu_max + 1e-9; nu += g.nu_step)
        CHECK(r.quality <= collapse_quality(c, h, nu) + 1e-15);
  }
}

TEST_CASE("collapse input validation") {
  const auto f = [](double h) { return h / 10; };
  const std::vector<AveragedCurve> one{make_curve(8, 0, 5, 1, f)};
  CHECK_THROWS_AS(collapse_fit(one), InvalidArgument);
  auto bad = logistic_family(3.5, 1.6, 0.0, 0);
  std::swap(bad[1].points[3], bad[1].points[4]);
  CHECK_THROWS_AS(collapse_fit(bad), InvalidArgument);
  CollapseGrid g;
  g.nu_step = 0.0;
  CHECK_THROWS_AS(collapse_fit(logistic_family(3.5, 1.6, 0.0, 0), g), InvalidArgument);
}

TEST_CASE("phase boundary table") {
  CHECK(phase_boundary({}).empty());
  CHECK(boundary_csv({}) == "epsilon,nu,dnu,h_c,dh_c,quality\n");
  std::vector<BoundaryRow> rows(3);
  rows[0].epsilon = 0.8;
  rows[1].epsilon = 0.2;
  rows[2].epsilon = 0.5;
  rows[2].result.h_c = 3.5;
  rows[2].result.nu = 1.6;
  const auto sorted = phase_boundary(rows);
  CHECK(sorted[0].epsilon == 0.2);
  CHECK(sorted[2].epsilon == 0.8);
  const auto csv = boundary_csv(sorted);
  CHECK(csv.find("\n0.5,1.6,") != std::string::npos);
}

TEST_CASE("uncertainty width") {
  SUBCASE("logistic curve") {
    const double w = 0.5;
    const auto c = make_curve(12, 0, 8, 0.01, [&](double h) { return oracle::logistic((h - 3.0) / w); });
    // 0.1 and 0.9 sit at h = 3 -/+ w ln 9.
    CHECK(uncertainty_width(c) == doctest::Approx(w * std::log(81.0)).epsilon(1e-3));
    CHECK(uncertainty_width(c) == doctest::Approx(2.197).epsilon(1e-3));
  }
  SUBCASE("step curve") {
    const auto c = make_curve(12, 0, 6, 0.05, [](double h) { return h < 3.0 ? 0.0 : 1.0; });
    CHECK(uncertainty_width(c) <= 0.05 + 1e-12);
    const auto x = crossings(c);
    REQUIRE(x.size() == 1);
    CHECK(x[0] == doctest::Approx(2.975));
  }
  SUBCASE("flat curve never crosses") {
    const auto c = make_curve(12, 0, 6, 0.5, [](double) { return 0.5; });
    CHECK_THROWS_AS(uncertainty_width(c), NotCrossed);
    CHECK_THROWS_AS(uncertainty_width(make_curve(12, 0, 6, 0.5, [](double) { return 0.2; })), NotCrossed);
  }
  SUBCASE("width shrinks as curves sharpen") {
    double previous = 1e9;
    for (double w : {2.0, 1.0, 0.5, 0.25, 0.1}) {
      const auto c = make_curve(12, -10, 16, 0.02, [&](double h) { return oracle::logistic((h - 3.0) / w); });
      const double width = uncertainty_width(c);
      CHECK(width <= previous);
      previous = width;
    }
  }
  SUBCASE("crossing count") {
    const auto bump = make_curve(8, 0, 6, 0.5, [](double h) { return std::exp(-(h - 3) * (h - 3)); });
    CHECK(crossings(bump).size() == 2);
  }
}

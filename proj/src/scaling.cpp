#include "mbl/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "mbl/errors.hpp"
#include "mbl/worker_pool.hpp"

namespace mbl {

CurvePoint average_point(double h, std::span<const double> values) {
  CurvePoint p;
  p.h = h;
  p.n = values.size();
  if (values.empty()) return p;
  // Summing in sorted order makes the result independent of input order.
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  p.mean = sum / static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - p.mean) * (x - p.mean);
    p.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return p;
}

std::vector<AveragedCurve> disorder_average(std::span<const Sample> samples) {
  std::map<std::tuple<int, double, double>, std::vector<double>> groups;
  for (const auto& s : samples) groups[{s.n_sites, s.epsilon, s.h}].push_back(s.value);

  std::vector<AveragedCurve> curves;
  for (const auto& [key, values] : groups) {
    const auto [n, eps, h] = key;
    if (curves.empty() || curves.back().n_sites != n || curves.back().epsilon != eps) {
      curves.push_back({n, eps, {}});
    }
    curves.back().points.push_back(average_point(h, values));
  }
  return curves;
}

namespace {

struct Scaled {
  std::vector<double> x;
  std::vector<double> y;
};

std::vector<Scaled> rescale(std::span<const AveragedCurve> curves, double h_c, double nu) {
  std::vector<Scaled> out(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const double f = std::pow(static_cast<double>(curves[i].n_sites), 1.0 / nu);
    for (const auto& p : curves[i].points) {
      out[i].x.push_back(f * (p.h - h_c));
      out[i].y.push_back(p.mean);
    }
  }
  return out;
}

double interpolate(const Scaled& c, double x) {
  auto it = std::lower_bound(c.x.begin(), c.x.end(), x);
  const auto j = static_cast<std::size_t>(it - c.x.begin());
  if (j < c.x.size() && c.x[j] == x) return c.y[j];
  const double t = (x - c.x[j - 1]) / (c.x[j] - c.x[j - 1]);
  return c.y[j - 1] + t * (c.y[j] - c.y[j - 1]);
}

double quality_or_inf(std::span<const AveragedCurve> curves, double h_c, double nu) {
  try {
    return collapse_quality(curves, h_c, nu);
  } catch (const NoOverlap&) {
    return std::numeric_limits<double>::infinity();
  }
}

std::vector<double> axis(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) v.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  return v;
}

/// Distance from `center` along one axis at which f first exceeds `limit`.
template <typename F>
double half_width(F&& f, double center, double lo, double hi, double step, double limit) {
  double worst = 0.0;
  for (double dir : {-1.0, 1.0}) {
    const double bound = dir < 0 ? center - lo : hi - center;
    double d = step;
    for (; d < bound; d += step)
      if (f(center + dir * d) > limit) break;
    worst = std::max(worst, std::min(d, std::max(bound, step)));
  }
  return worst;
}

}  // namespace

double collapse_quality(std::span<const AveragedCurve> curves, double h_c, double nu) {
  if (!(nu > 0.0)) throw InvalidArgument("nu must be positive");
  const auto scaled = rescale(curves, h_c, nu);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    for (std::size_t j = 0; j < scaled.size(); ++j) {
      if (i == j || scaled[j].x.size() < 2) continue;
      const double lo = scaled[j].x.front(), hi = scaled[j].x.back();
      for (std::size_t p = 0; p < scaled[i].x.size(); ++p) {
        const double x = scaled[i].x[p];
        if (x < lo || x > hi) continue;
        const double d = scaled[i].y[p] - interpolate(scaled[j], x);
        sum += d * d;
        ++count;
      }
    }
  }
  if (count == 0) throw NoOverlap("curves do not overlap in scaled coordinates");
  return sum / static_cast<double>(count);
}

CollapseResult collapse_fit(std::span<const AveragedCurve> curves, const CollapseGrid& grid) {
  if (curves.size() < 2) throw InvalidArgument("collapse needs at least two curves");
  for (const auto& c : curves) {
    if (c.points.size() < 2) throw InvalidArgument("collapse needs at least two points per curve");
    for (std::size_t i = 1; i < c.points.size(); ++i)
      if (!(c.points[i].h > c.points[i - 1].h)) throw InvalidArgument("curve h values must be strictly increasing");
  }
  if (!(grid.h_c_step > 0.0 && grid.nu_step > 0.0 && grid.h_c_max >= grid.h_c_min && grid.nu_max >= grid.nu_min &&
        grid.nu_min > 0.0))
    throw InvalidArgument("bad collapse grid");

  const auto hcs = axis(grid.h_c_min, grid.h_c_max, grid.h_c_step);
  const auto nus = axis(grid.nu_min, grid.nu_max, grid.nu_step);
  const auto rows = parallel_map(hcs, grid.workers, [&](double hc) {
    std::vector<double> q;
    q.reserve(nus.size());
    for (double nu : nus) q.push_back(quality_or_inf(curves, hc, nu));
    return q;
  });

  CollapseResult best;
  best.grid = grid;
  best.quality = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hcs.size(); ++i)
    for (std::size_t j = 0; j < nus.size(); ++j) {
      if (std::isfinite(rows[i][j])) ++best.evaluated;
      if (rows[i][j] < best.quality) {
        best.quality = rows[i][j];
        best.h_c = hcs[i];
        best.nu = nus[j];
      }
    }
  if (best.evaluated == 0) throw NoOverlap("no candidate (h_c, nu) produces overlapping curves");

  // Pattern search inside the grid box, accepting only strict improvements.
  double sh = grid.h_c_step / 2, sn = grid.nu_step / 2;
  while (sh > grid.h_c_step * 1e-4 || sn > grid.nu_step * 1e-4) {
    bool moved = false;
    const std::pair<double, double> moves[] = {{-sh, 0}, {sh, 0}, {0, -sn}, {0, sn}};
    for (auto [dh, dn] : moves) {
      const double hc = best.h_c + dh, nu = best.nu + dn;
      if (hc < grid.h_c_min || hc > grid.h_c_max || nu < grid.nu_min || nu > grid.nu_max) continue;
      const double q = quality_or_inf(curves, hc, nu);
      if (q < best.quality) {
        best.quality = q;
        best.h_c = hc;
        best.nu = nu;
        moved = true;
      }
    }
    if (!moved) {
      sh /= 2;
      sn /= 2;
    }
  }

  const double limit = grid.error_factor * best.quality;
  best.h_c_err = half_width([&](double hc) { return quality_or_inf(curves, hc, best.nu); }, best.h_c, grid.h_c_min,
                            grid.h_c_max, grid.h_c_step / 20, limit);
  best.nu_err = half_width([&](double nu) { return quality_or_inf(curves, best.h_c, nu); }, best.nu, grid.nu_min,
                           grid.nu_max, grid.nu_step / 20, limit);
  return best;
}

std::vector<BoundaryRow> phase_boundary(std::vector<BoundaryRow> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const BoundaryRow& a, const BoundaryRow& b) { return a.epsilon < b.epsilon; });
  return rows;
}

std::string boundary_csv(std::span<const BoundaryRow> rows) {
  std::ostringstream os;
  os.precision(10);
  os << "epsilon,nu,dnu,h_c,dh_c,quality\n";
  for (const auto& r : rows)
    os << r.epsilon << ',' << r.result.nu << ',' << r.result.nu_err << ',' << r.result.h_c << ','
       << r.result.h_c_err << ',' << r.result.quality << '\n';
  return os.str();
}

std::string curves_csv(std::span<const AveragedCurve> curves) {
  std::ostringstream os;
  os.precision(12);
  os << "n_sites,epsilon,h,mean,std,n\n";
  for (const auto& c : curves)
    for (const auto& p : c.points)
      os << c.n_sites << ',' << c.epsilon << ',' << p.h << ',' << p.mean << ',' << p.std << ',' << p.n << '\n';
  return os.str();
}

std::vector<double> crossings(const AveragedCurve& curve, double level) {
  std::vector<double> out;
  const auto& pts = curve.points;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const bool below_a = pts[i].mean < level, below_b = pts[i + 1].mean < level;
    if (below_a == below_b) continue;
    const double t = (level - pts[i].mean) / (pts[i + 1].mean - pts[i].mean);
    out.push_back(pts[i].h + t * (pts[i + 1].h - pts[i].h));
  }
  return out;
}

double uncertainty_width(const AveragedCurve& curve, Band band) {
  if (!(band.lo < 0.5 && 0.5 < band.hi)) throw InvalidArgument("band must straddle 0.5");
  const auto& pts = curve.points;
  std::size_t cross = pts.size();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    if ((pts[i].mean < 0.5) != (pts[i + 1].mean < 0.5)) {
      cross = i;
      break;
    }
  if (cross == pts.size()) throw NotCrossed("curve never crosses 0.5");

  const auto inside = [&](std::size_t i) { return pts[i].mean > band.lo && pts[i].mean < band.hi; };
  // h on segment (a, b) where the mean reaches the band edge on the side of point `out`.
  const auto edge = [&](std::size_t a, std::size_t b, std::size_t out) {
    const double level = pts[out].mean <= band.lo ? band.lo : band.hi;
    const double t = (level - pts[a].mean) / (pts[b].mean - pts[a].mean);
    return pts[a].h + t * (pts[b].h - pts[a].h);
  };

  std::size_t l = cross;
  while (inside(l)) {
    if (l == 0) throw NotCrossed("curve does not leave the band below the crossing");
    --l;
  }
  const double left = edge(l, l + 1, l);

  std::size_t r = cross + 1;
  while (inside(r)) {
    if (r + 1 == pts.size()) throw NotCrossed("curve does not leave the band above the crossing");
    ++r;
  }
  const double right = edge(r - 1, r, r);
  return std::max(0.0, right - left);
}

}  // namespace mbl

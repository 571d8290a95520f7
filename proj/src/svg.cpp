#include "mbl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mbl/errors.hpp"

namespace mbl::svg {
namespace {

constexpr std::array<int, 3> kLow{33, 102, 172};
constexpr std::array<int, 3> kHigh{178, 24, 43};
constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Box {
  double left, top, width, height;
};

struct Scale {
  double lo, hi, px_lo, px_hi;
  double operator()(double v) const { return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo); }
};

void header(std::ostringstream& os, int w, int h) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void text(std::ostringstream& os, double x, double y, const std::string& s, const char* anchor = "middle",
          double rotate = 0.0) {
  os << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << '"';
  if (rotate != 0.0) os << " transform=\"rotate(" << num(rotate) << ' ' << num(x) << ' ' << num(y) << ")\"";
  os << '>' << escape(s) << "</text>\n";
}

void axes(std::ostringstream& os, const Box& b, const Scale& sx, const Scale& sy, const std::string& xl,
          const std::string& yl, int ticks = 5) {
  os << "<rect x=\"" << num(b.left) << "\" y=\"" << num(b.top) << "\" width=\"" << num(b.width) << "\" height=\""
     << num(b.height) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= ticks; ++i) {
    const double vx = sx.lo + (sx.hi - sx.lo) * i / ticks;
    const double vy = sy.lo + (sy.hi - sy.lo) * i / ticks;
    const double px = sx(vx), py = sy(vy);
    const double bottom = b.top + b.height;
    os << "<line x1=\"" << num(px) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(px) << "\" y2=\""
       << num(bottom + 4) << "\" stroke=\"black\"/>\n";
    text(os, px, bottom + 16, label(vx));
    os << "<line x1=\"" << num(b.left - 4) << "\" y1=\"" << num(py) << "\" x2=\"" << num(b.left) << "\" y2=\""
       << num(py) << "\" stroke=\"black\"/>\n";
    text(os, b.left - 6, py + 4, label(vy), "end");
  }
  text(os, b.left + b.width / 2, b.top + b.height + 32, xl);
  text(os, b.left - 40, b.top + b.height / 2, yl, "middle", -90);
}

std::pair<double, double> extent(const std::vector<Series>& series, bool use_x) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double v = use_x ? s.x[i] : s.y[i];
      const double e = (!use_x && !s.err.empty()) ? s.err[i] : 0.0;
      lo = std::min(lo, v - e);
      hi = std::max(hi, v + e);
    }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

void panel(std::ostringstream& os, const Panel& p, const Box& b, bool legend) {
  const auto [x0, x1] = extent(p.series, true);
  auto [y0, y1] = extent(p.series, false);
  y0 = std::min(y0, 0.0);
  y1 = std::max(y1, 1.0);
  const Scale sx{x0, x1, b.left, b.left + b.width};
  const Scale sy{y0, y1, b.top + b.height, b.top};
  axes(os, b, sx, sy, p.x_label, p.y_label);
  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const auto& s = p.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (!s.err.empty()) {
      os << "<path fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" d=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        os << (i ? 'L' : 'M') << num(sx(s.x[i])) << ',' << num(sy(s.y[i] + s.err[i]));
      for (std::size_t i = s.x.size(); i-- > 0;) os << 'L' << num(sx(s.x[i])) << ',' << num(sy(s.y[i] - s.err[i]));
      os << "Z\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " " : "") << num(sx(s.x[i])) << ',' << num(sy(s.y[i]));
    os << "\"/>\n";
    if (legend) {
      const double ly = b.top + 14 + 16 * static_cast<double>(k);
      os << "<line x1=\"" << num(b.left + 8) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(b.left + 28)
         << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      text(os, b.left + 32, ly, s.label, "start");
    }
  }
}

void check(const Series& s) {
  if (s.x.size() != s.y.size() || (!s.err.empty() && s.err.size() != s.x.size()))
    throw InvalidArgument("series '" + s.label + "' has mismatched lengths");
}

}  // namespace

std::array<int, 3> ramp(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  std::array<int, 3> c{};
  for (int i = 0; i < 3; ++i) c[i] = static_cast<int>(std::lround(kLow[i] + t * (kHigh[i] - kLow[i])));
  return c;
}

std::string ramp_hex(double t) {
  const auto c = ramp(t);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

std::string heatmap(const Heatmap& m) {
  if (m.x.empty() || m.y.empty()) throw InvalidArgument("heatmap without cells");
  if (m.cells.size() != m.x.size() * m.y.size()) throw InvalidArgument("heatmap grid is not rectangular");
  if (!(m.vmax > m.vmin)) throw InvalidArgument("heatmap color range is empty");

  const int W = 640, H = 480;
  const Box b{70, 40, 460, 380};
  std::ostringstream os;
  header(os, W, H);
  text(os, b.left + b.width / 2, 24, m.title);

  // Cell edges sit halfway between neighboring centers.
  const auto edges = [](const std::vector<double>& c) {
    std::vector<double> e(c.size() + 1);
    if (c.size() == 1) {
      e[0] = c[0] - 0.5;
      e[1] = c[0] + 0.5;
      return e;
    }
    for (std::size_t i = 1; i < c.size(); ++i) e[i] = 0.5 * (c[i - 1] + c[i]);
    e.front() = c.front() - (e[1] - c.front());
    e.back() = c.back() + (c.back() - e[c.size() - 1]);
    return e;
  };
  const auto ex = edges(m.x), ey = edges(m.y);
  const Scale sx{ex.front(), ex.back(), b.left, b.left + b.width};
  const Scale sy{ey.front(), ey.back(), b.top + b.height, b.top};

  for (std::size_t r = 0; r < m.y.size(); ++r)
    for (std::size_t c = 0; c < m.x.size(); ++c) {
      const auto& v = m.cells[r * m.x.size() + c];
      const double x0 = sx(ex[c]), x1 = sx(ex[c + 1]), y0 = sy(ey[r + 1]), y1 = sy(ey[r]);
      os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(x1 - x0) << "\" height=\""
         << num(y1 - y0) << "\" fill=\"" << (v ? ramp_hex((*v - m.vmin) / (m.vmax - m.vmin)) : "#bdbdbd")
         << "\"/>\n";
    }
  axes(os, b, sx, sy, m.x_label, m.y_label);

  for (const auto& mk : m.markers) {
    const double px = sx(mk.x), py = sy(mk.y);
    if (mk.x_err > 0.0)
      os << "<line x1=\"" << num(sx(mk.x - mk.x_err)) << "\" y1=\"" << num(py) << "\" x2=\""
         << num(sx(mk.x + mk.x_err)) << "\" y2=\"" << num(py) << "\" stroke=\"black\"/>\n";
    os << "<circle cx=\"" << num(px) << "\" cy=\"" << num(py) << "\" r=\"3\" fill=\"white\" stroke=\"black\"/>\n";
  }

  // Color bar.
  const double bx = b.left + b.width + 30, bw = 16;
  const int steps = 32;
  for (int i = 0; i < steps; ++i) {
    const double t = (i + 0.5) / steps;
    const double y = b.top + b.height * (1.0 - static_cast<double>(i + 1) / steps);
    os << "<rect x=\"" << num(bx) << "\" y=\"" << num(y) << "\" width=\"" << num(bw) << "\" height=\""
       << num(b.height / steps + 0.5) << "\" fill=\"" << ramp_hex(t) << "\"/>\n";
  }
  text(os, bx + bw + 4, b.top + 4, label(m.vmax), "start");
  text(os, bx + bw + 4, b.top + b.height, label(m.vmin), "start");
  os << "</svg>\n";
  return os.str();
}

std::string curves(const CurvePlot& p) {
  if (p.main.series.empty()) throw InvalidArgument("curve plot without series");
  for (const auto& s : p.main.series) check(s);
  if (p.inset)
    for (const auto& s : p.inset->series) check(s);

  const int W = 640, H = 480;
  std::ostringstream os;
  header(os, W, H);
  const Box main{70, 40, 540, 380};
  text(os, main.left + main.width / 2, 24, p.title);
  panel(os, p.main, main, true);
  if (p.inset && !p.inset->series.empty()) {
    const Box in{main.left + main.width - 230, main.top + main.height - 190, 210, 150};
    os << "<rect x=\"" << num(in.left - 45) << "\" y=\"" << num(in.top - 10) << "\" width=\"" << num(in.width + 55)
       << "\" height=\"" << num(in.height + 50) << "\" fill=\"white\" stroke=\"#999999\"/>\n";
    panel(os, *p.inset, in, false);
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace mbl::svg

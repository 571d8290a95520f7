#include "mbl/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "mbl/errors.hpp"
#include "mbl/rng.hpp"
#include "mbl/spectrum.hpp"
#include "mbl/spin_chain.hpp"
#include "mbl/svg.hpp"
#include "mbl/worker_pool.hpp"

namespace fs = std::filesystem;

namespace mbl {
namespace {

// Baseline heatmap color range: Poisson to Wigner-Dyson.
constexpr double kBaselineLow = kGapRatioPoisson;
constexpr double kBaselineHigh = kGapRatioWignerDyson;

std::string tag(int n) { return "N" + std::to_string(n); }

std::string eps_tag(double e) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", e);
  return buf;
}

void say(const RunOptions& run, const std::string& line) {
  if (run.log) *run.log << line << std::endl;
}

bool skip(const RunOptions& run, std::initializer_list<fs::path> outputs) {
  if (run.force) return false;
  for (const auto& p : outputs)
    if (!fs::exists(p)) return false;
  for (const auto& p : outputs) say(run, "skip: " + p.string() + " exists (use --force to rebuild)");
  return true;
}

void require_artifact(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p))
    throw MissingArtifact("missing '" + p.string() + "'; run `mblnet " + producer + "` with the same config first");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

fs::path partial(const fs::path& p) {
  auto t = p;
  t += ".partial";
  return t;
}

void rename_into_place(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::rename(from, to, ec);
  if (ec) throw IoError("cannot move '" + from.string() + "' to '" + to.string() + "': " + ec.message());
}

void save_dataset(const fs::path& path, const Dataset& ds) {
  ensure_dir(path.parent_path());
  const auto tmp = partial(path);
  save_records(tmp, ds);
  rename_into_place(manifest_path(tmp), manifest_path(path));
  rename_into_place(tmp, path);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<BoundaryRow> read_boundary_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<BoundaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 6) throw IoError("malformed row in '" + path.string() + "'");
    BoundaryRow r;
    r.epsilon = parse_double(c[0]);
    r.result.nu = parse_double(c[1]);
    r.result.nu_err = parse_double(c[2]);
    r.result.h_c = parse_double(c[3]);
    r.result.h_c_err = parse_double(c[4]);
    r.result.quality = parse_double(c[5]);
    rows.push_back(r);
  }
  return rows;
}

struct Realization {
  std::size_t h_index;
  std::uint32_t realization;
};

std::vector<Realization> realization_tasks(std::size_t n_h, std::uint32_t realizations) {
  std::vector<Realization> tasks;
  tasks.reserve(n_h * realizations);
  for (std::size_t i = 0; i < n_h; ++i)
    for (std::uint32_t r = 0; r < realizations; ++r) tasks.push_back({i, r});
  return tasks;
}

SpectrumResult solve(const PipelineConfig& cfg, const SpinBasis& basis, double h, std::uint64_t seed,
                     bool vectors) {
  const auto disorder = sample_disorder(h, basis.n_sites(), seed);
  const auto ham = build_hamiltonian(basis, disorder, cfg.boundary);
  try {
    return diagonalize(ham, {cfg.max_dimension, vectors});
  } catch (const CapacityError& e) {
    throw CapacityError(std::string(e.what()) + " (N = " + std::to_string(basis.n_sites()) +
                        ", h = " + fmt(h) + ")");
  }
}

}  // namespace

std::string PhaseDiagram::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "n_sites,h,epsilon,mean,std,n\n";
  for (std::size_t e = 0; e < epsilon.size(); ++e)
    for (std::size_t i = 0; i < h.size(); ++i) {
      const auto& c = at(e, i);
      os << n_sites << ',' << h[i] << ',' << epsilon[e] << ',';
      if (c.n > 0) os << c.mean << ',' << c.std;
      else os << ',';
      os << ',' << c.n << '\n';
    }
  return os.str();
}

fs::path Paths::labeled(int n) const { return root / "data" / ("labeled_" + tag(n) + ".mbls"); }
fs::path Paths::unlabeled(int n) const { return root / "data" / ("unlabeled_" + tag(n) + ".mbls"); }
fs::path Paths::baseline_csv(int n) const { return root / "baseline" / ("gap_ratio_" + tag(n) + ".csv"); }
fs::path Paths::baseline_svg(int n) const { return root / "baseline" / ("gap_ratio_" + tag(n) + ".svg"); }
fs::path Paths::checkpoint(int n) const { return root / "models" / ("dann_" + tag(n) + ".ckpt"); }
fs::path Paths::train_log(int n) const { return root / "logs" / ("train_" + tag(n) + ".csv"); }
fs::path Paths::predictions() const { return root / "predictions.csv"; }
fs::path Paths::boundary() const { return root / "boundary.csv"; }
fs::path Paths::phase_figure(int n) const { return root / "figures" / ("phase_diagram_" + tag(n) + ".svg"); }
fs::path Paths::collapse_figure(double e) const { return root / "figures" / ("collapse_eps" + eps_tag(e) + ".svg"); }

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  const auto tmp = partial(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  rename_into_place(tmp, path);
}

std::vector<AveragedCurve> read_curves_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "n_sites,epsilon,h,mean,std,n")
    throw IoError("'" + path.string() + "' is not a curve table");
  std::vector<AveragedCurve> curves;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 6) throw IoError("malformed row in '" + path.string() + "'");
    const int n = static_cast<int>(parse_u64(c[0]));
    const double eps = parse_double(c[1]);
    if (curves.empty() || curves.back().n_sites != n || curves.back().epsilon != eps) curves.push_back({n, eps, {}});
    curves.back().points.push_back({parse_double(c[2]), parse_double(c[3]), parse_double(c[4]), parse_u64(c[5])});
  }
  return curves;
}

PhaseDiagram gap_ratio_diagram(const PipelineConfig& cfg, int n_sites) {
  const auto basis = enumerate_basis(n_sites);
  const auto& h = cfg.baseline.h;
  const auto& eps = cfg.baseline.epsilon;
  const auto tasks = realization_tasks(h.size(), cfg.baseline.realizations);

  const auto per_task = parallel_map(tasks, cfg.workers, [&](const Realization& t) {
    const auto seed = derive_seed(cfg.master_seed, {kBaselineTag, static_cast<std::uint64_t>(n_sites), t.h_index,
                                                    t.realization});
    const auto spec = solve(cfg, basis, h[t.h_index], seed, false);
    std::vector<std::optional<double>> r(eps.size());
    for (std::size_t e = 0; e < eps.size(); ++e) {
      try {
        r[e] = gap_ratio(spec, window_around(eps[e], cfg.baseline.window)).r_mean;
      } catch (const InsufficientLevels&) {
      }
    }
    return r;
  });

  PhaseDiagram d{n_sites, h, eps, std::vector<PhaseCell>(h.size() * eps.size())};
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t e = 0; e < eps.size(); ++e) {
      std::vector<double> values;
      for (std::uint32_t r = 0; r < cfg.baseline.realizations; ++r)
        if (const auto& v = per_task[i * cfg.baseline.realizations + r][e]) values.push_back(*v);
      const auto p = average_point(h[i], values);
      d.cells[e * h.size() + i] = {p.mean, p.std, p.n};
    }
  return d;
}

std::vector<Sample> prediction_samples(const DannModel& model, const PipelineConfig& cfg, int n_sites) {
  if (model.architecture().n_sites != n_sites)
    throw InvalidArgument("model was trained for N = " + std::to_string(model.architecture().n_sites));
  const auto basis = enumerate_basis(n_sites);
  const auto& h = cfg.predict.h;
  const auto& eps = cfg.predict.epsilon;
  const auto tasks = realization_tasks(h.size(), cfg.predict.realizations);

  const auto per_task = parallel_map(tasks, cfg.workers, [&](const Realization& t) {
    const auto seed = derive_seed(cfg.master_seed, {kPredictTag, static_cast<std::uint64_t>(n_sites), t.h_index,
                                                    t.realization});
    const auto spec = solve(cfg, basis, h[t.h_index], seed, true);
    std::vector<double> p_mean(eps.size());
    for (std::size_t e = 0; e < eps.size(); ++e) {
      const auto states = select_states(spec, eps[e], cfg.k);
      std::vector<std::vector<float>> coeffs;
      coeffs.reserve(states.size());
      for (const auto& s : states) {
        const std::vector<float> v(s.vector.data(), s.vector.data() + s.vector.size());
        coeffs.push_back(sign_fix<float>(v));
      }
      std::vector<const std::vector<float>*> ptrs;
      for (const auto& c : coeffs) ptrs.push_back(&c);
      const auto p = predict_mbl(model, ptrs);
      double sum = 0.0;
      for (double x : p) sum += x;
      p_mean[e] = sum / static_cast<double>(p.size());
    }
    return p_mean;
  });

  std::vector<Sample> samples;
  samples.reserve(tasks.size() * eps.size());
  for (std::size_t t = 0; t < tasks.size(); ++t)
    for (std::size_t e = 0; e < eps.size(); ++e)
      samples.push_back({n_sites, eps[e], h[tasks[t].h_index], per_task[t][e]});
  return samples;
}

void cmd_generate(const PipelineConfig& cfg, const RunOptions& run) {
  cfg.validate();
  const Paths paths{cfg.out};
  ensure_dir(paths.labeled(cfg.n_sites.front()).parent_path());
  for (int n : cfg.n_sites) {
    const auto opts = cfg.build_options(n);
    if (!skip(run, {paths.labeled(n), manifest_path(paths.labeled(n))})) {
      say(run, "generate: labeled set, N = " + std::to_string(n) + ", " +
                   std::to_string(labeled_realizations(opts)) + " realizations per point");
      save_dataset(paths.labeled(n), build_labeled_set(opts));
    }
    if (!skip(run, {paths.unlabeled(n), manifest_path(paths.unlabeled(n))})) {
      say(run, "generate: unlabeled set, N = " + std::to_string(n) + ", " +
                   std::to_string(unlabeled_realizations(opts)) + " realizations per point");
      save_dataset(paths.unlabeled(n), build_unlabeled_set(opts));
    }
  }
}

void cmd_baseline(const PipelineConfig& cfg, const RunOptions& run) {
  cfg.validate();
  const Paths paths{cfg.out};
  for (int n : cfg.n_sites) {
    if (skip(run, {paths.baseline_csv(n), paths.baseline_svg(n)})) continue;
    say(run, "baseline: N = " + std::to_string(n));
    const auto d = gap_ratio_diagram(cfg, n);
    svg::Heatmap map;
    map.title = "Mean gap ratio, N = " + std::to_string(n);
    map.x_label = "h";
    map.y_label = "epsilon";
    map.x = d.h;
    map.y = d.epsilon;
    map.vmin = kBaselineLow;
    map.vmax = kBaselineHigh;
    for (const auto& c : d.cells) map.cells.push_back(c.n > 0 ? std::optional<double>(c.mean) : std::nullopt);
    const auto figure = svg::heatmap(map);
    write_file_atomic(paths.baseline_csv(n), d.to_csv());
    write_file_atomic(paths.baseline_svg(n), figure);
  }
}

void cmd_train(const PipelineConfig& cfg, const RunOptions& run) {
  cfg.validate();
  const Paths paths{cfg.out};
  for (int n : cfg.n_sites) {
    if (skip(run, {paths.checkpoint(n), paths.train_log(n)})) continue;
    require_artifact(paths.labeled(n), "generate");
    require_artifact(paths.unlabeled(n), "generate");
    const auto labeled = load_records(paths.labeled(n));
    const auto unlabeled = load_records(paths.unlabeled(n));
    say(run, "train: N = " + std::to_string(n) + ", " + std::to_string(labeled.records.size()) + " labeled, " +
                 std::to_string(unlabeled.records.size()) + " unlabeled records");
    auto model = make_model(n, cfg.train);
    const auto log = train(model, labeled.records, unlabeled.records, cfg.train, [&](const EpochLog& e) {
      std::ostringstream os;
      os << "  epoch " << e.epoch << ": L_d = " << e.loss_d << ", L_a = " << e.loss_a
         << ", flips = " << e.label_flip_fraction;
      say(run, os.str());
    });
    if (!log.converged) say(run, "train: N = " + std::to_string(n) + " stopped at max_epochs without converging");
    ensure_dir(paths.checkpoint(n).parent_path());
    const auto tmp = partial(paths.checkpoint(n));
    save_checkpoint(tmp, model, cfg.train);
    write_file_atomic(paths.train_log(n), log.to_csv());
    rename_into_place(tmp, paths.checkpoint(n));
  }
}

void cmd_predict(const PipelineConfig& cfg, const RunOptions& run) {
  cfg.validate();
  const Paths paths{cfg.out};
  if (skip(run, {paths.predictions()})) return;
  for (int n : cfg.n_sites) require_artifact(paths.checkpoint(n), "train");
  std::vector<Sample> samples;
  for (int n : cfg.n_sites) {
    say(run, "predict: N = " + std::to_string(n));
    const auto ck = load_checkpoint(paths.checkpoint(n));
    const auto s = prediction_samples(ck.model, cfg, n);
    samples.insert(samples.end(), s.begin(), s.end());
  }
  write_file_atomic(paths.predictions(), curves_csv(disorder_average(samples)));
}

void cmd_collapse(const PipelineConfig& cfg, const RunOptions& run) {
  cfg.validate();
  const Paths paths{cfg.out};
  if (skip(run, {paths.boundary()})) return;
  require_artifact(paths.predictions(), "predict");
  const auto curves = read_curves_csv(paths.predictions());

  std::map<double, std::vector<AveragedCurve>> by_eps;
  for (const auto& c : curves) by_eps[c.epsilon].push_back(c);
  auto grid = cfg.collapse;
  grid.workers = cfg.workers;

  std::vector<BoundaryRow> rows;
  for (const auto& [eps, group] : by_eps) {
    if (group.size() < 2) {
      say(run, "collapse: epsilon = " + fmt(eps) + " has fewer than two system sizes, skipped");
      continue;
    }
    try {
      rows.push_back({eps, collapse_fit(group, grid)});
    } catch (const NoOverlap& e) {
      say(run, "collapse: epsilon = " + fmt(eps) + ": " + e.what());
      continue;
    }
    const auto& r = rows.back().result;
    say(run, "collapse: epsilon = " + fmt(eps) + ": h_c = " + fmt(r.h_c) + " +/- " + fmt(r.h_c_err) +
                 ", nu = " + fmt(r.nu) + " +/- " + fmt(r.nu_err));
  }
  write_file_atomic(paths.boundary(), boundary_csv(phase_boundary(std::move(rows))));
}

void cmd_report(const PipelineConfig& cfg, const RunOptions& run) {
  cfg.validate();
  const Paths paths{cfg.out};
  require_artifact(paths.predictions(), "predict");
  const auto curves = read_curves_csv(paths.predictions());
  if (curves.empty()) throw InvalidArgument("'" + paths.predictions().string() + "' holds no predictions");
  std::vector<BoundaryRow> boundary;
  if (fs::exists(paths.boundary())) boundary = read_boundary_csv(paths.boundary());
  else say(run, "report: no boundary table, figures will omit collapse results");

  // Render everything before writing anything.
  std::vector<std::pair<fs::path, std::string>> figures;

  std::set<int> sizes;
  for (const auto& c : curves) sizes.insert(c.n_sites);
  for (int n : sizes) {
    std::set<double> hs, es;
    for (const auto& c : curves)
      if (c.n_sites == n) {
        es.insert(c.epsilon);
        for (const auto& p : c.points) hs.insert(p.h);
      }
    svg::Heatmap map;
    map.title = "Predicted P(MBL), N = " + std::to_string(n);
    map.x_label = "h";
    map.y_label = "epsilon";
    map.x.assign(hs.begin(), hs.end());
    map.y.assign(es.begin(), es.end());
    map.cells.assign(map.x.size() * map.y.size(), std::nullopt);
    for (const auto& c : curves) {
      if (c.n_sites != n) continue;
      const auto row = static_cast<std::size_t>(std::distance(es.begin(), es.find(c.epsilon)));
      for (const auto& p : c.points) {
        const auto col = static_cast<std::size_t>(std::distance(hs.begin(), hs.find(p.h)));
        map.cells[row * map.x.size() + col] = p.mean;
      }
    }
    for (const auto& b : boundary) map.markers.push_back({b.result.h_c, b.epsilon, b.result.h_c_err});
    figures.emplace_back(paths.phase_figure(n), svg::heatmap(map));
  }

  std::map<double, std::vector<const AveragedCurve*>> by_eps;
  for (const auto& c : curves) by_eps[c.epsilon].push_back(&c);
  for (const auto& [eps, group] : by_eps) {
    svg::CurvePlot plot;
    plot.title = "P(MBL) at epsilon = " + eps_tag(eps);
    plot.main.x_label = "h";
    plot.main.y_label = "P(MBL)";
    const BoundaryRow* fit = nullptr;
    for (const auto& b : boundary)
      if (b.epsilon == eps) fit = &b;
    if (fit) plot.inset = svg::Panel{"N^(1/nu) (h - h_c)", "P(MBL)", {}};
    for (const auto* c : group) {
      svg::Series s{"N = " + std::to_string(c->n_sites), {}, {}, {}};
      bool bands = true;
      for (const auto& p : c->points) bands = bands && p.has_band();
      for (const auto& p : c->points) {
        s.x.push_back(p.h);
        s.y.push_back(p.mean);
        if (bands) s.err.push_back(p.std);
      }
      if (fit) {
        svg::Series scaled{s.label, {}, s.y, {}};
        const double f = std::pow(static_cast<double>(c->n_sites), 1.0 / fit->result.nu);
        for (double x : s.x) scaled.x.push_back(f * (x - fit->result.h_c));
        plot.inset->series.push_back(std::move(scaled));
      }
      plot.main.series.push_back(std::move(s));
    }
    figures.emplace_back(paths.collapse_figure(eps), svg::curves(plot));
  }

  for (const auto& [path, content] : figures) {
    if (!run.force && fs::exists(path)) {
      say(run, "skip: " + path.string() + " exists (use --force to rebuild)");
      continue;
    }
    write_file_atomic(path, content);
  }
  say(run, "report: " + std::to_string(figures.size()) + " figures under " + (paths.root / "figures").string());
}

}  // namespace mbl

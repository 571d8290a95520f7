#include "mbl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mbl/errors.hpp"

namespace mbl {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"pipeline", {"n_sites", "master_seed", "workers", "out"}},
      {"dataset", {"scale", "k", "boundary", "realizations", "max_dimension"}},
      {"grids", {"delocalized_h", "mbl_h", "unlabeled_h", "epsilon"}},
      {"baseline", {"h", "epsilon", "realizations", "window"}},
      {"train",
       {"learning_rate", "batch_size", "max_epochs", "dropout", "lambda", "lambda_warmup_epochs",
        "stability_threshold", "seed", "bn_momentum", "bn_epsilon", "adversary", "threads"}},
      {"predict", {"h", "epsilon", "realizations"}},
      {"collapse",
       {"h_c_min", "h_c_max", "h_c_step", "nu_min", "nu_max", "nu_step", "error_factor", "band_lo", "band_hi"}},
  };
  return s;
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text) {
  ConfigFile cfg;
  std::string section;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto hash = raw.find('#');
    const auto line = trim(raw.substr(0, hash));
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(where + "empty section name");
      cfg.values_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = std::string(trim(line.substr(0, eq)));
    const auto value = std::string(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (section.empty()) throw ConfigError(where + "key '" + key + "' outside of any section");
    auto& sec = cfg.values_[section];
    if (sec.count(key)) throw ConfigError(where + "duplicate key '" + key + "' in [" + section + "]");
    sec[key] = value;
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto it = values_.find(section);
  return it != values_.end() && it->second.count(key);
}

const std::string& ConfigFile::get(const std::string& section, const std::string& key) const {
  if (!has(section, key)) throw ConfigError("missing [" + section + "] " + key);
  return values_.at(section).at(key);
}

std::vector<std::string> ConfigFile::keys(const std::string& section) const {
  std::vector<std::string> out;
  const auto it = values_.find(section);
  if (it != values_.end())
    for (const auto& [k, v] : it->second) out.push_back(k);
  return out;
}

std::vector<std::string> ConfigFile::sections() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

double parse_double(std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError("not a finite number: '" + std::string(text) + "'");
  return v;
}

std::uint64_t parse_u64(std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size())
    throw ConfigError("not a non-negative integer: '" + std::string(text) + "'");
  return v;
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  throw ConfigError("not a boolean: '" + std::string(text) + "'");
}

std::vector<double> parse_list(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw ConfigError("empty list");
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("range must be start:stop:step, got '" + std::string(text) + "'");
    const double start = parse_double(parts[0]), stop = parse_double(parts[1]), step = parse_double(parts[2]);
    if (!(step > 0.0) || stop < start) throw ConfigError("bad range '" + std::string(text) + "'");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    return arithmetic_grid(start, step, count);
  }
  std::vector<double> out;
  for (auto p : split(text, ',')) out.push_back(parse_double(p));
  return out;
}

void PipelineConfig::validate() const {
  if (n_sites.empty()) throw ConfigError("n_sites list is empty");
  for (int n : n_sites)
    if (n < 2 || n % 2 != 0) throw ConfigError("n_sites must be even and >= 2, got " + std::to_string(n));
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("dataset scale must be finite and > 0");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (realizations && *realizations < 1) throw ConfigError("realizations must be >= 1");
  const std::pair<const char*, const std::vector<double>*> grids_in_use[] = {
      {"grids.delocalized_h", &grids.delocalized_h}, {"grids.mbl_h", &grids.mbl_h},
      {"grids.unlabeled_h", &grids.unlabeled_h},     {"grids.epsilon", &grids.epsilon},
      {"baseline.h", &baseline.h},                   {"baseline.epsilon", &baseline.epsilon},
      {"predict.h", &predict.h},                     {"predict.epsilon", &predict.epsilon}};
  for (auto [name, g] : grids_in_use) {
    if (g->empty()) throw ConfigError(std::string(name) + " is empty");
    for (double v : *g)
      if (v < 0.0) throw ConfigError(std::string(name) + " has a negative value");
  }
  for (double e : grids.epsilon)
    if (e < 0.0 || e > 1.0) throw ConfigError("grids.epsilon values must lie in [0, 1]");
  if (baseline.realizations < 1 || predict.realizations < 1) throw ConfigError("realizations must be >= 1");
  if (!(baseline.window > 0.0)) throw ConfigError("baseline.window must be > 0");
  try {
    train.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[train] ") + e.what());
  }
  if (!(collapse.h_c_step > 0.0 && collapse.nu_step > 0.0 && collapse.h_c_max >= collapse.h_c_min &&
        collapse.nu_max >= collapse.nu_min && collapse.nu_min > 0.0 && collapse.error_factor > 1.0))
    throw ConfigError("bad [collapse] grid");
  if (!(band.lo < 0.5 && 0.5 < band.hi)) throw ConfigError("band must satisfy band_lo < 0.5 < band_hi");
}

BuildOptions PipelineConfig::build_options(int n) const {
  BuildOptions o;
  o.n_sites = n;
  o.scale = scale;
  o.master_seed = master_seed;
  o.k = k;
  o.boundary = boundary;
  o.max_dimension = max_dimension;
  o.workers = workers;
  o.grids = grids;
  o.realizations = realizations;
  return o;
}

PipelineConfig pipeline_config(const ConfigFile& file) {
  const auto& sch = schema();
  for (const auto& s : file.sections()) {
    const auto it = sch.find(s);
    if (it == sch.end()) throw ConfigError("unknown section [" + s + "]");
    for (const auto& k : file.keys(s))
      if (!it->second.count(k)) throw ConfigError("unknown key '" + k + "' in [" + s + "]");
  }

  PipelineConfig c;
  const auto opt = [&](const char* s, const char* k, auto&& apply) {
    if (!file.has(s, k)) return;
    try {
      apply(file.get(s, k));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("[") + s + "] " + k + ": " + e.what());
    }
  };
  const auto as_uint = [](const std::string& v) {
    const auto x = parse_u64(v);
    if (x > 0xFFFFFFFFull) throw ConfigError("value too large");
    return static_cast<std::uint32_t>(x);
  };

  opt("pipeline", "n_sites", [&](const std::string& v) {
    c.n_sites.clear();
    for (double x : parse_list(v)) {
      if (x != std::floor(x)) throw ConfigError("n_sites must be integers");
      c.n_sites.push_back(static_cast<int>(x));
    }
  });
  opt("pipeline", "master_seed", [&](const std::string& v) { c.master_seed = parse_u64(v); });
  opt("pipeline", "workers", [&](const std::string& v) { c.workers = as_uint(v); });
  opt("pipeline", "out", [&](const std::string& v) { c.out = v; });

  opt("dataset", "scale", [&](const std::string& v) { c.scale = parse_double(v); });
  opt("dataset", "k", [&](const std::string& v) { c.k = as_uint(v); });
  opt("dataset", "boundary", [&](const std::string& v) {
    try {
      c.boundary = parse_boundary(v);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  });
  opt("dataset", "realizations", [&](const std::string& v) { c.realizations = as_uint(v); });
  opt("dataset", "max_dimension", [&](const std::string& v) { c.max_dimension = as_uint(v); });

  opt("grids", "delocalized_h", [&](const std::string& v) { c.grids.delocalized_h = parse_list(v); });
  opt("grids", "mbl_h", [&](const std::string& v) { c.grids.mbl_h = parse_list(v); });
  opt("grids", "unlabeled_h", [&](const std::string& v) { c.grids.unlabeled_h = parse_list(v); });
  opt("grids", "epsilon", [&](const std::string& v) { c.grids.epsilon = parse_list(v); });

  opt("baseline", "h", [&](const std::string& v) { c.baseline.h = parse_list(v); });
  opt("baseline", "epsilon", [&](const std::string& v) { c.baseline.epsilon = parse_list(v); });
  opt("baseline", "realizations", [&](const std::string& v) { c.baseline.realizations = as_uint(v); });
  opt("baseline", "window", [&](const std::string& v) { c.baseline.window = parse_double(v); });

  auto& t = c.train;
  opt("train", "learning_rate", [&](const std::string& v) { t.learning_rate = parse_double(v); });
  opt("train", "batch_size", [&](const std::string& v) { t.batch_size = as_uint(v); });
  opt("train", "max_epochs", [&](const std::string& v) { t.max_epochs = static_cast<int>(as_uint(v)); });
  opt("train", "dropout", [&](const std::string& v) { t.dropout_p = parse_double(v); });
  opt("train", "lambda", [&](const std::string& v) { t.lambda = parse_double(v); });
  opt("train", "lambda_warmup_epochs",
      [&](const std::string& v) { t.lambda_warmup_epochs = static_cast<int>(as_uint(v)); });
  opt("train", "stability_threshold", [&](const std::string& v) { t.stability_threshold = parse_double(v); });
  opt("train", "seed", [&](const std::string& v) { t.rng_seed = parse_u64(v); });
  opt("train", "bn_momentum", [&](const std::string& v) { t.bn_momentum = parse_double(v); });
  opt("train", "bn_epsilon", [&](const std::string& v) { t.bn_epsilon = parse_double(v); });
  opt("train", "adversary", [&](const std::string& v) { t.adversary_enabled = parse_bool(v); });
  opt("train", "threads", [&](const std::string& v) { t.threads = as_uint(v); });

  opt("predict", "h", [&](const std::string& v) { c.predict.h = parse_list(v); });
  opt("predict", "epsilon", [&](const std::string& v) { c.predict.epsilon = parse_list(v); });
  opt("predict", "realizations", [&](const std::string& v) { c.predict.realizations = as_uint(v); });

  auto& g = c.collapse;
  opt("collapse", "h_c_min", [&](const std::string& v) { g.h_c_min = parse_double(v); });
  opt("collapse", "h_c_max", [&](const std::string& v) { g.h_c_max = parse_double(v); });
  opt("collapse", "h_c_step", [&](const std::string& v) { g.h_c_step = parse_double(v); });
  opt("collapse", "nu_min", [&](const std::string& v) { g.nu_min = parse_double(v); });
  opt("collapse", "nu_max", [&](const std::string& v) { g.nu_max = parse_double(v); });
  opt("collapse", "nu_step", [&](const std::string& v) { g.nu_step = parse_double(v); });
  opt("collapse", "error_factor", [&](const std::string& v) { g.error_factor = parse_double(v); });
  opt("collapse", "band_lo", [&](const std::string& v) { c.band.lo = parse_double(v); });
  opt("collapse", "band_hi", [&](const std::string& v) { c.band.hi = parse_double(v); });

  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return pipeline_config(ConfigFile::load(path));
}

std::string to_text(const PipelineConfig& c) {
  std::ostringstream os;
  os << "[pipeline]\n"
     << "n_sites = " << join(c.n_sites) << "\n"
     << "master_seed = " << c.master_seed << "\n"
     << "workers = " << c.workers << "\n"
     << "out = " << c.out.string() << "\n\n";
  os << "[dataset]\n"
     << "scale = " << fmt(c.scale) << "\n"
     << "k = " << c.k << "\n"
     << "boundary = " << to_string(c.boundary) << "\n";
  if (c.realizations) os << "realizations = " << *c.realizations << "\n";
  os << "max_dimension = " << c.max_dimension << "\n\n";
  os << "[grids]\n"
     << "delocalized_h = " << join(c.grids.delocalized_h) << "\n"
     << "mbl_h = " << join(c.grids.mbl_h) << "\n"
     << "unlabeled_h = " << join(c.grids.unlabeled_h) << "\n"
     << "epsilon = " << join(c.grids.epsilon) << "\n\n";
  os << "[baseline]\n"
     << "h = " << join(c.baseline.h) << "\n"
     << "epsilon = " << join(c.baseline.epsilon) << "\n"
     << "realizations = " << c.baseline.realizations << "\n"
     << "window = " << fmt(c.baseline.window) << "\n\n";
  const auto& t = c.train;
  os << "[train]\n"
     << "learning_rate = " << fmt(t.learning_rate) << "\n"
     << "batch_size = " << t.batch_size << "\n"
     << "max_epochs = " << t.max_epochs << "\n"
     << "dropout = " << fmt(t.dropout_p) << "\n"
     << "lambda = " << fmt(t.lambda) << "\n"
     << "lambda_warmup_epochs = " << t.lambda_warmup_epochs << "\n"
     << "stability_threshold = " << fmt(t.stability_threshold) << "\n"
     << "seed = " << t.rng_seed << "\n"
     << "bn_momentum = " << fmt(t.bn_momentum) << "\n"
     << "bn_epsilon = " << fmt(t.bn_epsilon) << "\n"
     << "adversary = " << (t.adversary_enabled ? "true" : "false") << "\n"
     << "threads = " << t.threads << "\n\n";
  os << "[predict]\n"
     << "h = " << join(c.predict.h) << "\n"
     << "epsilon = " << join(c.predict.epsilon) << "\n"
     << "realizations = " << c.predict.realizations << "\n\n";
  const auto& g = c.collapse;
  os << "[collapse]\n"
     << "h_c_min = " << fmt(g.h_c_min) << "\n"
     << "h_c_max = " << fmt(g.h_c_max) << "\n"
     << "h_c_step = " << fmt(g.h_c_step) << "\n"
     << "nu_min = " << fmt(g.nu_min) << "\n"
     << "nu_max = " << fmt(g.nu_max) << "\n"
     << "nu_step = " << fmt(g.nu_step) << "\n"
     << "error_factor = " << fmt(g.error_factor) << "\n"
     << "band_lo = " << fmt(c.band.lo) << "\n"
     << "band_hi = " << fmt(c.band.hi) << "\n";
  return os.str();
}

}  // namespace mbl

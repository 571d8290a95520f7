#include "mbl/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mbl/binary_io.hpp"
#include "mbl/rng.hpp"
#include "mbl/worker_pool.hpp"

namespace mbl {
namespace {

constexpr char kMagic[] = "MBLS";
constexpr std::uint8_t kNoPhase = 0xff;

enum class Source : std::uint64_t { delocalized = 1, mbl = 2, unlabeled = 3 };

struct GenTask {
  Source source;
  std::size_t h_index;
  std::uint32_t realization;
  double h;
};

std::uint64_t record_bytes_for(int n_sites) {
  return 5 * sizeof(double) + 2 + 4 * binomial(n_sites, n_sites / 2);
}

void validate(const BuildOptions& o) {
  if (!(o.scale > 0.0) || !std::isfinite(o.scale)) throw InvalidArgument("dataset scale must be finite and > 0");
  if (o.k == 0) throw InvalidArgument("k must be positive");
  if (o.grids.epsilon.empty()) throw InvalidArgument("epsilon grid is empty");
  for (double e : o.grids.epsilon)
    if (!(e >= 0.0 && e <= 1.0)) throw InvalidArgument("epsilon grid value outside [0, 1]");
  if (o.realizations && *o.realizations == 0) throw InvalidArgument("realizations override must be >= 1");
}

std::vector<EigenstateRecord> generate(const GenTask& task, const BuildOptions& o, const SpinBasis& basis) {
  const std::uint64_t seed =
      derive_seed(o.master_seed, {static_cast<std::uint64_t>(task.source), task.h_index, task.realization});
  std::vector<EigenstateRecord> out;
  try {
    const auto disorder = sample_disorder(task.h, o.n_sites, seed);
    const auto spectrum = diagonalize(build_hamiltonian(basis, disorder, o.boundary), {o.max_dimension, true});
    out.reserve(o.grids.epsilon.size() * o.k);
    for (double eps : o.grids.epsilon) {
      for (const auto& state : select_states(spectrum, eps, o.k)) {
        EigenstateRecord r;
        r.n_sites = o.n_sites;
        r.h = task.h;
        r.epsilon_target = eps;
        r.epsilon_actual = state.epsilon;
        r.energy = state.energy;
        r.seed = seed;
        std::vector<float> coeffs(state.vector.data(), state.vector.data() + state.vector.size());
        r.coefficients = sign_fix<float>(coeffs);
        if (task.source == Source::unlabeled) {
          r.domain = DomainTag::unlabeled;
        } else {
          r.domain = DomainTag::labeled;
          r.phase = task.source == Source::delocalized ? Phase::delocalized : Phase::mbl;
        }
        out.push_back(std::move(r));
      }
    }
  } catch (const CapacityError& e) {
    std::ostringstream msg;
    msg << e.what() << " (h=" << task.h << ", realization=" << task.realization << ")";
    throw CapacityError(msg.str());
  }
  return out;
}

Dataset run_tasks(const std::vector<GenTask>& tasks, const BuildOptions& o, DatasetManifest manifest) {
  const SpinBasis basis = enumerate_basis(o.n_sites);
  if (o.k > basis.dimension())
    throw InvalidArgument("k = " + std::to_string(o.k) + " exceeds sector dimension " +
                          std::to_string(basis.dimension()));
  auto chunks = parallel_map(tasks, o.workers, [&](const GenTask& t) { return generate(t, o, basis); });

  Dataset ds;
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.size();
  ds.records.reserve(total);
  for (auto& c : chunks) {
    for (auto& r : c) {
      if (r.domain == DomainTag::unlabeled)
        ++manifest.n_unlabeled;
      else if (r.phase == Phase::delocalized)
        ++manifest.n_delocalized;
      else
        ++manifest.n_mbl;
      ds.records.push_back(std::move(r));
    }
    c.clear();
    c.shrink_to_fit();
  }
  manifest.record_bytes = record_bytes_for(o.n_sites);
  ds.manifest = std::move(manifest);
  return ds;
}

DatasetManifest base_manifest(const BuildOptions& o, SetKind kind) {
  DatasetManifest m;
  m.kind = kind;
  m.n_sites = o.n_sites;
  m.boundary = o.boundary;
  m.master_seed = o.master_seed;
  m.k = static_cast<std::uint32_t>(o.k);
  m.epsilon = o.grids.epsilon;
  return m;
}

std::uint32_t realizations_for(const BuildOptions& o, std::size_t n_h) {
  if (o.realizations) return *o.realizations;
  if (n_h == 0) return 0;
  const double per_realization = static_cast<double>(n_h * o.grids.epsilon.size() * o.k);
  const double r = std::ceil(kRecordsPerSetAtFullScale * o.scale / per_realization - 1e-9);
  return static_cast<std::uint32_t>(std::max(1.0, r));
}

}  // namespace

DatasetGrids DatasetGrids::appendix() {
  DatasetGrids g;
  g.delocalized_h = arithmetic_grid(0.10, 0.05, 9);
  g.mbl_h = arithmetic_grid(7.0, 0.1, 11);
  g.unlabeled_h = arithmetic_grid(0.5, 0.2, 33);
  g.epsilon = arithmetic_grid(0.05, 0.05, 19);
  return g;
}

std::vector<double> arithmetic_grid(double start, double step, std::size_t count) {
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) g[i] = std::round((start + static_cast<double>(i) * step) * 1e9) / 1e9;
  return g;
}

std::uint32_t labeled_realizations(const BuildOptions& o) {
  validate(o);
  return realizations_for(o, o.grids.delocalized_h.size());
}

std::uint32_t unlabeled_realizations(const BuildOptions& o) {
  validate(o);
  return realizations_for(o, o.grids.unlabeled_h.size());
}

std::vector<std::uint32_t> spread_rows(std::uint32_t total_rows, std::size_t n_values) {
  std::vector<std::uint32_t> counts(n_values, 0);
  const std::uint64_t m = total_rows;
  for (std::size_t i = 0; i < n_values; ++i)
    counts[i] = static_cast<std::uint32_t>((i + 1) * m / n_values - i * m / n_values);
  return counts;
}

Dataset build_labeled_set(const BuildOptions& o) {
  validate(o);
  if (o.grids.delocalized_h.empty() || o.grids.mbl_h.empty()) throw InvalidArgument("labeled h grids are empty");
  const std::uint32_t r = labeled_realizations(o);

  std::vector<GenTask> tasks;
  for (std::size_t i = 0; i < o.grids.delocalized_h.size(); ++i)
    for (std::uint32_t k = 0; k < r; ++k) tasks.push_back({Source::delocalized, i, k, o.grids.delocalized_h[i]});

  // The MBL class gets as many (h, realization) rows as the delocalized class,
  // which balances the classes exactly even though the grids differ in length.
  const auto rows = spread_rows(r * static_cast<std::uint32_t>(o.grids.delocalized_h.size()), o.grids.mbl_h.size());
  for (std::size_t i = 0; i < o.grids.mbl_h.size(); ++i)
    for (std::uint32_t k = 0; k < rows[i]; ++k) tasks.push_back({Source::mbl, i, k, o.grids.mbl_h[i]});

  auto m = base_manifest(o, SetKind::labeled);
  m.realizations = r;
  m.h_primary = o.grids.delocalized_h;
  m.h_secondary = o.grids.mbl_h;
  return run_tasks(tasks, o, std::move(m));
}

Dataset build_unlabeled_set(const BuildOptions& o) {
  validate(o);
  if (o.grids.unlabeled_h.empty()) throw InvalidArgument("unlabeled h grid is empty");
  const std::uint32_t r = unlabeled_realizations(o);

  std::vector<GenTask> tasks;
  for (std::size_t i = 0; i < o.grids.unlabeled_h.size(); ++i)
    for (std::uint32_t k = 0; k < r; ++k) tasks.push_back({Source::unlabeled, i, k, o.grids.unlabeled_h[i]});

  auto m = base_manifest(o, SetKind::unlabeled);
  m.realizations = r;
  m.h_primary = o.grids.unlabeled_h;
  return run_tasks(tasks, o, std::move(m));
}

// ---------------------------------------------------------------------------
// File format

std::filesystem::path manifest_path(const std::filesystem::path& records_path) {
  auto p = records_path;
  p += ".manifest";
  return p;
}

namespace {

void put_grid(io::Writer& w, const std::vector<double>& g) {
  w.put(static_cast<std::uint32_t>(g.size()));
  w.put_array<double>(g);
}

std::vector<double> get_grid(io::Reader& r) {
  const auto n = r.get<std::uint32_t>();
  if (n > (1u << 20)) throw FormatError(FormatErrorKind::corrupt_header, "implausible grid length");
  std::vector<double> g(n);
  r.get_array<double>(g);
  return g;
}

std::uint64_t header_bytes(const DatasetManifest& m) {
  return 4 + 2 + 1 + 1 + 2 + 4 + 8 + 4 + 3 * 4 + 8 * (m.epsilon.size() + m.h_primary.size() + m.h_secondary.size()) +
         4 * 8;
}

void join(std::ostringstream& os, const std::vector<double>& g) {
  for (std::size_t i = 0; i < g.size(); ++i) os << (i ? ", " : "") << g[i];
}

}  // namespace

std::string manifest_text(const DatasetManifest& m) {
  std::ostringstream os;
  os.precision(12);
  os << "# eigenstate record manifest\n";
  os << "format = MBLS\n";
  os << "version = " << kRecordFormatVersion << "\n";
  os << "set = " << (m.kind == SetKind::labeled ? "labeled" : "unlabeled") << "\n";
  os << "n_sites = " << m.n_sites << "\n";
  os << "boundary = " << to_string(m.boundary) << "\n";
  os << "master_seed = " << m.master_seed << "\n";
  os << "k = " << m.k << "\n";
  os << "realizations_per_point = " << m.realizations << "\n";
  os << "epsilon = ";
  join(os, m.epsilon);
  os << "\n";
  if (m.kind == SetKind::labeled) {
    os << "delocalized_h = ";
    join(os, m.h_primary);
    os << "\nmbl_h = ";
    join(os, m.h_secondary);
    os << "\n";
  } else {
    os << "unlabeled_h = ";
    join(os, m.h_primary);
    os << "\n";
  }
  os << "# record counts\n";
  os << "count_delocalized = " << m.n_delocalized << "\n";
  os << "count_mbl = " << m.n_mbl << "\n";
  os << "count_unlabeled = " << m.n_unlabeled << "\n";
  os << "count_total = " << m.total() << "\n";
  os << "# byte layout\n";
  os << "payload_offset = " << m.payload_offset << "\n";
  os << "record_bytes = " << m.record_bytes << "\n";
  return os.str();
}

void save_records(const std::filesystem::path& path, const Dataset& ds) {
  DatasetManifest m = ds.manifest;
  m.n_delocalized = m.n_mbl = m.n_unlabeled = 0;
  const std::size_t dim = binomial(m.n_sites, m.n_sites / 2);
  for (const auto& r : ds.records) {
    if (r.n_sites != m.n_sites || r.coefficients.size() != dim)
      throw InvalidArgument("record does not match the manifest's n_sites = " + std::to_string(m.n_sites));
    if ((r.domain == DomainTag::labeled) != r.phase.has_value())
      throw InvalidArgument("phase label must be present exactly for labeled records");
    if (r.domain == DomainTag::unlabeled)
      ++m.n_unlabeled;
    else if (*r.phase == Phase::delocalized)
      ++m.n_delocalized;
    else
      ++m.n_mbl;
  }
  m.payload_offset = header_bytes(m);
  m.record_bytes = record_bytes_for(m.n_sites);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  io::Writer w(out);
  w.put_bytes(std::string_view(kMagic, 4));
  w.put(kRecordFormatVersion);
  w.put(static_cast<std::uint8_t>(m.kind));
  w.put(static_cast<std::uint8_t>(m.boundary));
  w.put(static_cast<std::uint16_t>(m.n_sites));
  w.put(m.k);
  w.put(m.master_seed);
  w.put(m.realizations);
  put_grid(w, m.epsilon);
  put_grid(w, m.h_primary);
  put_grid(w, m.h_secondary);
  w.put(m.n_delocalized);
  w.put(m.n_mbl);
  w.put(m.n_unlabeled);
  w.put(static_cast<std::uint64_t>(ds.records.size()));

  for (const auto& r : ds.records) {
    w.put(r.h);
    w.put(r.epsilon_target);
    w.put(r.epsilon_actual);
    w.put(r.energy);
    w.put(r.seed);
    w.put(static_cast<std::uint8_t>(r.domain));
    w.put(r.phase ? static_cast<std::uint8_t>(*r.phase) : kNoPhase);
    w.put_array<float>(r.coefficients);
  }
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");

  std::ofstream text(manifest_path(path), std::ios::trunc);
  if (!text) throw IoError("cannot open '" + manifest_path(path).string() + "' for writing");
  text << manifest_text(m);
  if (!text) throw IoError("write to '" + manifest_path(path).string() + "' failed");
}

Dataset load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  io::Reader r(in, FormatErrorKind::corrupt_header);

  if (r.get_bytes(4) != std::string_view(kMagic, 4)) throw FormatError(FormatErrorKind::corrupt_header, "bad magic");
  const auto version = r.get<std::uint16_t>();
  if (version != kRecordFormatVersion)
    throw FormatError(FormatErrorKind::version_mismatch, "record file version " + std::to_string(version));

  Dataset ds;
  DatasetManifest& m = ds.manifest;
  const auto kind = r.get<std::uint8_t>();
  const auto boundary = r.get<std::uint8_t>();
  if (kind > 1 || boundary > 1) throw FormatError(FormatErrorKind::corrupt_header, "bad set kind or boundary");
  m.kind = static_cast<SetKind>(kind);
  m.boundary = static_cast<Boundary>(boundary);
  m.n_sites = r.get<std::uint16_t>();
  if (m.n_sites < 2 || m.n_sites > 30 || m.n_sites % 2)
    throw FormatError(FormatErrorKind::corrupt_header, "bad n_sites " + std::to_string(m.n_sites));
  m.k = r.get<std::uint32_t>();
  m.master_seed = r.get<std::uint64_t>();
  m.realizations = r.get<std::uint32_t>();
  m.epsilon = get_grid(r);
  m.h_primary = get_grid(r);
  m.h_secondary = get_grid(r);
  m.n_delocalized = r.get<std::uint64_t>();
  m.n_mbl = r.get<std::uint64_t>();
  m.n_unlabeled = r.get<std::uint64_t>();
  const auto count = r.get<std::uint64_t>();
  if (count != m.total())
    throw FormatError(FormatErrorKind::count_mismatch, "header record count disagrees with class counts");
  m.payload_offset = header_bytes(m);
  m.record_bytes = record_bytes_for(m.n_sites);

  const std::size_t dim = binomial(m.n_sites, m.n_sites / 2);
  r.set_short_kind(FormatErrorKind::truncated_payload);
  std::uint64_t n_deloc = 0, n_mbl = 0, n_unl = 0;
  ds.records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 16)));
  for (std::uint64_t i = 0; i < count; ++i) {
    EigenstateRecord rec;
    rec.n_sites = m.n_sites;
    rec.h = r.get<double>();
    rec.epsilon_target = r.get<double>();
    rec.epsilon_actual = r.get<double>();
    rec.energy = r.get<double>();
    rec.seed = r.get<std::uint64_t>();
    const auto domain = r.get<std::uint8_t>();
    const auto phase = r.get<std::uint8_t>();
    if (domain > 1 || (phase > 1 && phase != kNoPhase) || ((domain == 0) != (phase != kNoPhase)))
      throw FormatError(FormatErrorKind::corrupt_header, "bad tags in record " + std::to_string(i));
    rec.domain = static_cast<DomainTag>(domain);
    if (phase != kNoPhase) rec.phase = static_cast<Phase>(phase);
    rec.coefficients.resize(dim);
    r.get_array<float>(rec.coefficients);
    if (rec.domain == DomainTag::unlabeled)
      ++n_unl;
    else if (*rec.phase == Phase::delocalized)
      ++n_deloc;
    else
      ++n_mbl;
    ds.records.push_back(std::move(rec));
  }
  if (!r.at_eof()) throw FormatError(FormatErrorKind::count_mismatch, "trailing bytes after the last record");
  if (n_deloc != m.n_delocalized || n_mbl != m.n_mbl || n_unl != m.n_unlabeled)
    throw FormatError(FormatErrorKind::count_mismatch, "per-class counts disagree with the header");
  return ds;
}

}  // namespace mbl

#include <fstream>

#include "mbl/binary_io.hpp"
#include "mbl/dann.hpp"

namespace mbl {
namespace {

constexpr char kMagic[] = "DANN";

std::vector<nn::BatchNorm1d<float>*> norms(DannModel& m) {
  std::vector<nn::BatchNorm1d<float>*> out;
  for (auto& s : m.stages) out.push_back(&s.norm);
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DannModel& model_in, const TrainConfig& cfg) {
  // Parameter accessors are non-const; serialize from a copy.
  DannModel model = model_in;
  const auto& a = model.architecture();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  io::Writer w(out);
  w.put_bytes(std::string_view(kMagic, 4));
  w.put(kCheckpointVersion);

  w.put(static_cast<std::uint16_t>(a.n_sites));
  w.put(static_cast<std::uint32_t>(a.input_dim));
  w.put(static_cast<std::uint32_t>(a.pad_length));
  w.put(static_cast<std::uint16_t>(a.stages));
  w.put(static_cast<std::uint16_t>(a.filters));
  w.put(static_cast<std::uint16_t>(a.pool));
  w.put(static_cast<std::uint32_t>(a.hidden));
  w.put(static_cast<std::uint16_t>(a.classes));

  w.put(cfg.learning_rate);
  w.put(static_cast<std::uint32_t>(cfg.batch_size));
  w.put(static_cast<std::uint32_t>(cfg.max_epochs));
  w.put(cfg.dropout_p);
  w.put(cfg.lambda);
  w.put(static_cast<std::uint32_t>(cfg.lambda_warmup_epochs));
  w.put(cfg.stability_threshold);
  w.put(cfg.rng_seed);
  w.put(cfg.bn_momentum);
  w.put(cfg.bn_epsilon);
  w.put(static_cast<std::uint8_t>(cfg.adversary_enabled));
  w.put(static_cast<std::uint32_t>(cfg.threads));

  const auto params = model.all_params();
  std::uint64_t count = 0;
  for (const auto* p : params) count += p->size();
  w.put(count);
  for (const auto* p : params) w.put_array<float>(p->value);

  const auto bns = norms(model);
  w.put(static_cast<std::uint32_t>(bns.size()));
  for (const auto* bn : bns) {
    w.put(static_cast<std::uint32_t>(bn->channels()));
    w.put_array<float>(bn->running_mean);
    w.put_array<float>(bn->running_var);
  }
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  io::Reader r(in, FormatErrorKind::corrupt_header);
  if (r.get_bytes(4) != std::string_view(kMagic, 4)) throw FormatError(FormatErrorKind::corrupt_header, "bad magic");
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion)
    throw FormatError(FormatErrorKind::version_mismatch, "checkpoint version " + std::to_string(version));

  nn::Architecture a;
  a.n_sites = r.get<std::uint16_t>();
  a.input_dim = r.get<std::uint32_t>();
  a.pad_length = r.get<std::uint32_t>();
  a.stages = r.get<std::uint16_t>();
  a.filters = r.get<std::uint16_t>();
  a.pool = r.get<std::uint16_t>();
  a.hidden = r.get<std::uint32_t>();
  a.classes = r.get<std::uint16_t>();
  if (a.n_sites < 2 || a.n_sites > 30 || a.input_dim != binomial(a.n_sites, a.n_sites / 2) || a.stages == 0 ||
      a.stages > 8 || a.filters == 0 || a.filters > 1024 || a.pool < 1 || a.pool > 16 || a.hidden == 0 ||
      a.hidden > (1u << 16) || a.classes < 2 || a.classes > 16 ||
      a.pad_length != nn::Architecture::padded_length(a.input_dim, a.pool, a.stages))
    throw FormatError(FormatErrorKind::corrupt_header, "inconsistent architecture descriptor");

  TrainConfig cfg;
  cfg.learning_rate = r.get<double>();
  cfg.batch_size = r.get<std::uint32_t>();
  cfg.max_epochs = static_cast<int>(r.get<std::uint32_t>());
  cfg.dropout_p = r.get<double>();
  cfg.lambda = r.get<double>();
  cfg.lambda_warmup_epochs = static_cast<int>(r.get<std::uint32_t>());
  cfg.stability_threshold = r.get<double>();
  cfg.rng_seed = r.get<std::uint64_t>();
  cfg.bn_momentum = r.get<double>();
  cfg.bn_epsilon = r.get<double>();
  cfg.adversary_enabled = r.get<std::uint8_t>() != 0;
  cfg.threads = r.get<std::uint32_t>();
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatErrorKind::corrupt_header, std::string("stored config: ") + e.what());
  }

  DannModel model(a, static_cast<float>(cfg.dropout_p), static_cast<float>(cfg.bn_momentum),
                  static_cast<float>(cfg.bn_epsilon));
  r.set_short_kind(FormatErrorKind::truncated_payload);
  const auto params = model.all_params();
  std::uint64_t expected = 0;
  for (const auto* p : params) expected += p->size();
  if (r.get<std::uint64_t>() != expected)
    throw FormatError(FormatErrorKind::count_mismatch, "parameter count does not match the architecture");
  for (auto* p : params) r.get_array<float>(p->value);

  const auto bns = norms(model);
  if (r.get<std::uint32_t>() != bns.size())
    throw FormatError(FormatErrorKind::count_mismatch, "batch-norm layer count does not match the architecture");
  for (auto* bn : bns) {
    if (r.get<std::uint32_t>() != bn->channels())
      throw FormatError(FormatErrorKind::count_mismatch, "batch-norm channel count mismatch");
    r.get_array<float>(bn->running_mean);
    r.get_array<float>(bn->running_var);
  }
  if (!r.at_eof()) throw FormatError(FormatErrorKind::count_mismatch, "trailing bytes after checkpoint payload");
  return {std::move(model), cfg};
}

}  // namespace mbl

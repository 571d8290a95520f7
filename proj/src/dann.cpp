#include "mbl/dann.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "mbl/rng.hpp"

namespace mbl {
namespace {

constexpr std::size_t kInferenceChunk = 256;

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& gen) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(unit_interval(gen()) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

std::vector<int> argmax_labels(const DannModel& model, std::span<const EigenstateRecord> records) {
  std::vector<const std::vector<float>*> states;
  states.reserve(records.size());
  for (const auto& r : records) states.push_back(&r.coefficients);
  const auto p = predict_mbl(model, states);
  std::vector<int> labels(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) labels[i] = p[i] > 0.5 ? 1 : 0;
  return labels;
}

void check_sites(const DannModel& model, const EigenstateRecord& r) {
  if (r.n_sites != model.architecture().n_sites)
    throw InvalidArgument("record has n_sites = " + std::to_string(r.n_sites) + " but the model expects " +
                          std::to_string(model.architecture().n_sites));
}

}  // namespace

std::string TrainingLog::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,loss_d,loss_a,label_flip_fraction\n";
  for (const auto& e : epochs) os << e.epoch << ',' << e.loss_d << ',' << e.loss_a << ',' << e.label_flip_fraction << '\n';
  return os.str();
}

DannModel make_model(int n_sites, const TrainConfig& cfg) {
  cfg.validate();
  DannModel model(nn::Architecture::for_sites(n_sites), static_cast<float>(cfg.dropout_p),
                  static_cast<float>(cfg.bn_momentum), static_cast<float>(cfg.bn_epsilon));
  model.initialize(derive_seed(cfg.rng_seed, {1}));
  return model;
}

TrainingLog train(DannModel& model, std::span<const EigenstateRecord> labeled,
                  std::span<const EigenstateRecord> unlabeled, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (labeled.size() < 2) throw InvalidArgument("training needs at least two labeled records");
  std::size_t n_mbl = 0;
  for (const auto& r : labeled) {
    check_sites(model, r);
    if (!r.phase) throw InvalidArgument("labeled training record without a phase label");
    n_mbl += *r.phase == Phase::mbl;
  }
  if (n_mbl == 0 || n_mbl == labeled.size()) throw InvalidArgument("labeled set must contain both phases");
  for (const auto& r : unlabeled) check_sites(model, r);
  if (cfg.adversary_enabled && unlabeled.empty()) throw InvalidArgument("adversarial training needs unlabeled records");

  model.set_threads(cfg.threads);
  nn::Trainer<float> trainer(cfg);
  std::mt19937_64 order_gen(derive_seed(cfg.rng_seed, {21}));

  std::vector<std::size_t> lab_order(labeled.size());
  std::iota(lab_order.begin(), lab_order.end(), std::size_t{0});
  std::vector<std::size_t> unl_order(unlabeled.size());
  std::iota(unl_order.begin(), unl_order.end(), std::size_t{0});
  shuffle(unl_order, order_gen);
  std::size_t unl_cursor = 0;

  const auto monitored = unlabeled.empty() ? labeled : unlabeled;
  std::vector<int> previous = argmax_labels(model, monitored);

  TrainingLog log;
  std::vector<const std::vector<float>*> lab_batch, unl_batch;
  std::vector<int> labels;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto lambda = static_cast<float>(cfg.lambda_at(epoch));
    shuffle(lab_order, order_gen);
    double sum_d = 0.0, sum_a = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < lab_order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, lab_order.size() - start);
      if (n < 2) break;
      lab_batch.clear();
      labels.clear();
      for (std::size_t i = 0; i < n; ++i) {
        const auto& r = labeled[lab_order[start + i]];
        lab_batch.push_back(&r.coefficients);
        labels.push_back(static_cast<int>(*r.phase));
      }
      unl_batch.clear();
      for (std::size_t i = 0; i < n && !unlabeled.empty(); ++i) {
        if (unl_cursor == unl_order.size()) {
          shuffle(unl_order, order_gen);
          unl_cursor = 0;
        }
        unl_batch.push_back(&unlabeled[unl_order[unl_cursor++]].coefficients);
      }
      const auto x_lab = model.pack<std::vector<float>>(lab_batch);
      const auto x_unl = model.pack<std::vector<float>>(unl_batch);
      const auto stats = trainer.step(model, x_lab, labels, x_unl, lambda);
      if (!std::isfinite(stats.loss_d) || !std::isfinite(stats.loss_a))
        throw DivergenceError(epoch, "non-finite loss (L_d = " + std::to_string(stats.loss_d) +
                                         ", L_a = " + std::to_string(stats.loss_a) + ")");
      sum_d += stats.loss_d;
      sum_a += stats.loss_a;
      ++steps;
    }

    const std::vector<int> current = argmax_labels(model, monitored);
    std::size_t flips = 0;
    for (std::size_t i = 0; i < current.size(); ++i) flips += current[i] != previous[i];
    previous = current;

    EpochLog e;
    e.epoch = epoch;
    e.loss_d = steps ? sum_d / static_cast<double>(steps) : 0.0;
    e.loss_a = steps ? sum_a / static_cast<double>(steps) : 0.0;
    e.label_flip_fraction = current.empty() ? 0.0 : static_cast<double>(flips) / static_cast<double>(current.size());
    log.epochs.push_back(e);
    if (on_epoch) on_epoch(e);
    if (e.label_flip_fraction < cfg.stability_threshold) {
      log.converged = true;
      break;
    }
  }
  return log;
}

std::vector<double> predict_mbl(const DannModel& model, std::span<const std::vector<float>* const> states) {
  std::vector<double> out;
  out.reserve(states.size());
  for (std::size_t start = 0; start < states.size(); start += kInferenceChunk) {
    const std::size_t n = std::min(kInferenceChunk, states.size() - start);
    const auto x = model.pack<std::vector<float>>(states.subspan(start, n));
    const auto p = model.predict_proba(x);
    for (std::size_t b = 0; b < n; ++b) out.push_back(static_cast<double>(p(b, 1, 0)));
  }
  return out;
}

double predict(const DannModel& model, const EigenstateRecord& record) {
  check_sites(model, record);
  const std::vector<float>* state = &record.coefficients;
  return predict_mbl(model, std::span<const std::vector<float>* const>(&state, 1)).front();
}

}  // namespace mbl

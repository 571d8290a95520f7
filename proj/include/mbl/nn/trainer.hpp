#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mbl/errors.hpp"
#include "mbl/nn/dann.hpp"
#include "mbl/rng.hpp"

namespace mbl::nn {

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 64;
  int max_epochs = 200;
  double dropout_p = 0.5;
  double lambda = 1.0;
  /// Linear ramp of lambda from 0 over the first epochs; 0 disables it.
  int lambda_warmup_epochs = 0;
  double stability_threshold = 0.001;
  std::uint64_t rng_seed = 1;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;
  /// When false the adversary head is never evaluated; the feature extractor
  /// still sees the unlabeled half of every batch.
  bool adversary_enabled = true;
  /// Opt-in data parallelism inside the convolution layers.
  unsigned threads = 1;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw InvalidArgument("learning rate must be finite and >= 0");
    if (batch_size < 2) throw InvalidArgument("batch size must be >= 2 (batch normalization)");
    if (max_epochs < 1) throw InvalidArgument("max_epochs must be >= 1");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw InvalidArgument("dropout probability must be in [0, 1)");
    if (!(stability_threshold >= 0.0 && stability_threshold <= 1.0))
      throw InvalidArgument("stability threshold must be in [0, 1]");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
    if (lambda_warmup_epochs < 0) throw InvalidArgument("lambda warm-up must be >= 0");
    if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw InvalidArgument("batch-norm momentum must be in [0, 1]");
    if (!(bn_epsilon > 0.0)) throw InvalidArgument("batch-norm epsilon must be > 0");
  }

  /// Reversal scale used during the given (1-based) epoch.
  double lambda_at(int epoch) const {
    if (lambda_warmup_epochs <= 0 || epoch > lambda_warmup_epochs) return lambda;
    return lambda * static_cast<double>(epoch - 1) / static_cast<double>(lambda_warmup_epochs);
  }

  bool operator==(const TrainConfig&) const = default;
};

enum class LossTerms { both, discriminator_only, adversary_only };

struct StepStats {
  double loss_d = 0.0;
  double loss_a = 0.0;
};

/// One saddle-point step on a labeled and an unlabeled mini-batch. Holds the
/// dropout streams (separate for the two heads) and nothing else, so copies
/// replay identical masks.
template <typename T>
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg)
      : cfg_(cfg), disc_gen_(derive_seed(cfg.rng_seed, {11})), adv_gen_(derive_seed(cfg.rng_seed, {12})) {}

  const TrainConfig& config() const noexcept { return cfg_; }

  /// Zeroes and fills every gradient. Feature parameters receive
  /// dL_d/dtheta_f - lambda dL_a/dtheta_f through the reversal layer.
  StepStats compute_gradients(DannModel<T>& model, const Tensor<T>& labeled, std::span<const int> labels,
                              const Tensor<T>& unlabeled, T lambda, LossTerms terms = LossTerms::both) {
    require(labels.size() == labeled.batch, "trainer: label count mismatch");
    model.zero_grad();
    const std::size_t n_lab = labeled.batch;
    const Tensor<T> x = unlabeled.batch ? concat_batch(labeled, unlabeled) : labeled;
    const Tensor<T> features = model.forward_features(x, Mode::train);
    Tensor<T> grad(features.batch, features.channels, features.length);

    StepStats stats;
    if (terms != LossTerms::adversary_only) {
      const Tensor<T> logits =
          model.discriminator.forward_logits(slice_batch(features, 0, n_lab), Mode::train, disc_gen_);
      stats.loss_d = static_cast<double>(model.discriminator.loss.forward(logits, labels));
      const Tensor<T> g = model.discriminator.backward();
      std::copy(g.data.begin(), g.data.end(), grad.data.begin());
    }
    if (cfg_.adversary_enabled && terms != LossTerms::discriminator_only) {
      const GradientReversal<T> reversal{lambda};
      std::vector<int> domain(features.batch, 1);
      std::fill(domain.begin(), domain.begin() + static_cast<std::ptrdiff_t>(n_lab), 0);
      const Tensor<T> logits = model.adversary.forward_logits(reversal.forward(features), Mode::train, adv_gen_);
      stats.loss_a = static_cast<double>(model.adversary.loss.forward(logits, domain));
      const Tensor<T> g = reversal.backward(model.adversary.backward());
      for (std::size_t i = 0; i < grad.size(); ++i) grad.data[i] += g.data[i];
    }
    model.backward_features(grad);
    return stats;
  }

  /// theta <- theta - mu * grad for every parameter group.
  static void apply_update(DannModel<T>& model, T learning_rate) {
    for (auto* p : model.all_params())
      for (std::size_t i = 0; i < p->size(); ++i) p->value[i] -= learning_rate * p->grad[i];
  }

  StepStats step(DannModel<T>& model, const Tensor<T>& labeled, std::span<const int> labels,
                 const Tensor<T>& unlabeled, T lambda) {
    const StepStats s = compute_gradients(model, labeled, labels, unlabeled, lambda);
    apply_update(model, static_cast<T>(cfg_.learning_rate));
    return s;
  }

 private:
  TrainConfig cfg_;
  std::mt19937_64 disc_gen_;
  std::mt19937_64 adv_gen_;
};

}  // namespace mbl::nn

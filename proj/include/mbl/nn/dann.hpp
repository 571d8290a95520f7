#pragma once

// Domain-adversarial network: a convolutional feature extractor shared by a
// phase discriminator (trained on labeled states) and an adversary that tries
// to tell labeled from unlabeled states through a gradient-reversal layer.

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mbl/nn/layers.hpp"
#include "mbl/nn/tensor.hpp"
#include "mbl/spin_chain.hpp"

namespace mbl::nn {

struct Architecture {
  int n_sites = 0;
  std::size_t input_dim = 0;
  std::size_t pad_length = 0;
  std::size_t stages = 4;
  std::size_t filters = 4;
  std::size_t pool = 3;
  std::size_t hidden = 128;
  std::size_t classes = 2;

  /// Input zero-padded to the smallest multiple of pool^stages.
  static Architecture for_sites(int n_sites) {
    Architecture a;
    a.n_sites = n_sites;
    a.input_dim = binomial(n_sites, n_sites / 2);
    a.pad_length = padded_length(a.input_dim, a.pool, a.stages);
    return a;
  }

  static std::size_t padded_length(std::size_t dim, std::size_t pool, std::size_t stages) {
    std::size_t block = 1;
    for (std::size_t s = 0; s < stages; ++s) block *= pool;
    return (dim + block - 1) / block * block;
  }

  std::size_t feature_length() const {
    std::size_t len = pad_length;
    for (std::size_t s = 0; s < stages; ++s) len /= pool;
    return len;
  }
  std::size_t feature_size() const { return filters * feature_length(); }

  bool operator==(const Architecture&) const = default;
};

/// conv(width 3) -> ReLU -> max-pool(3) -> batch norm
template <typename T>
struct ConvStage {
  Conv1d<T> conv;
  Relu<T> relu;
  MaxPool1d<T> pool;
  BatchNorm1d<T> norm;

  ConvStage(std::size_t in, std::size_t out, std::size_t pool_width, T momentum, T epsilon)
      : conv(in, out), pool(pool_width), norm(out, momentum, epsilon) {}

  Tensor<T> infer(const Tensor<T>& x) const { return norm.infer(pool.infer(relu.infer(conv.infer(x)))); }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    return norm.forward(pool.forward(relu.forward(conv.forward(x))), mode);
  }
  Tensor<T> backward(const Tensor<T>& g) {
    return conv.backward(relu.backward(pool.backward(norm.backward(g))));
  }
};

/// dense(hidden) -> ReLU -> dropout -> dense(classes); softmax applied by the loss.
template <typename T>
struct Head {
  Dense<T> hidden;
  Relu<T> relu;
  Dropout<T> dropout;
  Dense<T> out;
  SoftmaxCrossEntropy<T> loss;

  Head(std::size_t in, std::size_t width, std::size_t classes, T dropout_p)
      : hidden(in, width), dropout(dropout_p), out(width, classes) {}

  void initialize(std::mt19937_64& gen) {
    hidden.initialize(gen);
    out.initialize(gen);
  }

  Tensor<T> infer_logits(const Tensor<T>& f) const { return out.infer(dropout.infer(relu.infer(hidden.infer(f)))); }
  Tensor<T> forward_logits(const Tensor<T>& f, Mode mode, std::mt19937_64& gen) {
    return out.forward(dropout.forward(relu.forward(hidden.forward(f)), mode, gen));
  }
  /// Gradient of the head's loss with respect to its input features.
  Tensor<T> backward() { return hidden.backward(relu.backward(dropout.backward(out.backward(loss.backward())))); }

  std::vector<Param<T>*> params() { return {&hidden.weight, &hidden.bias, &out.weight, &out.bias}; }
};

template <typename T>
class DannModel {
  Architecture arch_;

 public:
  std::vector<ConvStage<T>> stages;
  Head<T> discriminator;
  Head<T> adversary;

  explicit DannModel(const Architecture& arch, T dropout_p = T(0.5), T bn_momentum = T(0.9), T bn_epsilon = T(1e-5))
      : arch_(arch),
        discriminator(arch.feature_size(), arch.hidden, arch.classes, dropout_p),
        adversary(arch.feature_size(), arch.hidden, arch.classes, dropout_p) {
    require(arch.pad_length >= arch.input_dim && arch.feature_length() > 0, "architecture: bad padding");
    std::size_t in = 1;
    for (std::size_t s = 0; s < arch.stages; ++s) {
      stages.emplace_back(in, arch.filters, arch.pool, bn_momentum, bn_epsilon);
      in = arch.filters;
    }
  }

  /// Fan-in scaled uniform initialization.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    for (auto& s : stages) s.conv.initialize(gen);
    discriminator.initialize(gen);
    adversary.initialize(gen);
  }

  const Architecture& architecture() const noexcept { return arch_; }

  void set_threads(unsigned n) {
    for (auto& s : stages) s.conv.set_threads(n);
  }

  /// Packs coefficient vectors into a zero-padded (batch, 1, pad_length) tensor.
  template <typename Vec>
  Tensor<T> pack(std::span<const Vec* const> inputs) const {
    Tensor<T> x(inputs.size(), 1, arch_.pad_length);
    for (std::size_t b = 0; b < inputs.size(); ++b) {
      const Vec& v = *inputs[b];
      require(v.size() == arch_.input_dim, "input length " + std::to_string(v.size()) + " does not match model input " +
                                               std::to_string(arch_.input_dim));
      T* dst = x.sample(b);
      for (std::size_t i = 0; i < v.size(); ++i) dst[i] = static_cast<T>(v[i]);
    }
    return x;
  }

  Tensor<T> infer_features(const Tensor<T>& x) const {
    Tensor<T> h = x;
    for (const auto& s : stages) h = s.infer(h);
    return h;
  }

  Tensor<T> forward_features(const Tensor<T>& x, Mode mode) {
    require(x.channels == 1 && x.length == arch_.pad_length, "feature extractor: bad input shape");
    Tensor<T> h = x;
    for (auto& s : stages) h = s.forward(h, mode);
    return h;
  }

  Tensor<T> backward_features(const Tensor<T>& g) {
    Tensor<T> h = g;
    for (auto it = stages.rbegin(); it != stages.rend(); ++it) h = it->backward(h);
    return h;
  }

  /// Phase-discriminator probabilities in evaluation mode, (batch, classes, 1).
  Tensor<T> predict_proba(const Tensor<T>& x) const { return softmax(discriminator.infer_logits(infer_features(x))); }
  Tensor<T> adversary_proba(const Tensor<T>& x) const { return softmax(adversary.infer_logits(infer_features(x))); }

  std::vector<Param<T>*> feature_params() {
    std::vector<Param<T>*> p;
    for (auto& s : stages) {
      p.push_back(&s.conv.weight);
      p.push_back(&s.conv.bias);
      p.push_back(&s.norm.gamma);
      p.push_back(&s.norm.beta);
    }
    return p;
  }
  std::vector<Param<T>*> discriminator_params() { return discriminator.params(); }
  std::vector<Param<T>*> adversary_params() { return adversary.params(); }
  std::vector<Param<T>*> all_params() {
    auto p = feature_params();
    for (auto* q : discriminator_params()) p.push_back(q);
    for (auto* q : adversary_params()) p.push_back(q);
    return p;
  }

  void zero_grad() {
    for (auto* p : all_params()) p->zero_grad();
  }
};

/// Flattened copy of a parameter group's values (or gradients).
template <typename T>
std::vector<T> flatten_values(const std::vector<Param<T>*>& params) {
  std::vector<T> out;
  for (const auto* p : params) out.insert(out.end(), p->value.begin(), p->value.end());
  return out;
}

template <typename T>
std::vector<T> flatten_grads(const std::vector<Param<T>*>& params) {
  std::vector<T> out;
  for (const auto* p : params) out.insert(out.end(), p->grad.begin(), p->grad.end());
  return out;
}

}  // namespace mbl::nn

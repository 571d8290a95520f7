#pragma once

// Layers with explicit forward/backward passes. `forward` caches what the
// backward pass needs; `infer` is the pure evaluation-mode path.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "mbl/errors.hpp"
#include "mbl/nn/tensor.hpp"
#include "mbl/rng.hpp"

namespace mbl::nn {

/// Runs fn(begin, end, shard) over `shards` contiguous ranges of [0, n).
template <typename Fn>
void for_each_shard(std::size_t n, unsigned shards, Fn&& fn) {
  shards = std::max(1u, std::min<unsigned>(shards, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (shards == 1) {
    fn(std::size_t{0}, n, 0u);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned s = 0; s < shards; ++s) {
    const std::size_t b = n * s / shards, e = n * (s + 1) / shards;
    pool.emplace_back([&fn, b, e, s] { fn(b, e, s); });
  }
  for (auto& t : pool) t.join();
}

/// Uniform(-bound, bound) with bound = 1/sqrt(fan_in).
template <typename T>
void fan_in_uniform(std::vector<T>& values, std::size_t fan_in, std::mt19937_64& gen) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (T& v : values) v = static_cast<T>(bound * (2.0 * unit_interval(gen()) - 1.0));
}

// ---------------------------------------------------------------------------

/// Width-3 convolution with one zero of padding on each side, so the output
/// has the input length:
///   out[o, t] = bias[o] + sum_{i, k} w[o, i, k] * x[i, t + k - 1].
template <typename T>
class Conv1d {
 public:
  static constexpr std::size_t kWidth = 3;

  Conv1d() = default;
  Conv1d(std::size_t in_channels, std::size_t out_channels)
      : in_(in_channels), out_(out_channels), weight(out_channels * in_channels * kWidth), bias(out_channels) {}

  void initialize(std::mt19937_64& gen) {
    fan_in_uniform(weight.value, in_ * kWidth, gen);
    fan_in_uniform(bias.value, in_ * kWidth, gen);
  }

  std::size_t in_channels() const noexcept { return in_; }
  std::size_t out_channels() const noexcept { return out_; }
  void set_threads(unsigned n) noexcept { threads_ = std::max(1u, n); }

  Tensor<T> infer(const Tensor<T>& x) const {
    require(x.channels == in_, "conv1d: expected " + std::to_string(in_) + " input channels, got " +
                                   std::to_string(x.channels));
    const std::size_t len = x.length;
    Tensor<T> y(x.batch, out_, len);
    for_each_shard(x.batch, threads_, [&](std::size_t b0, std::size_t b1, unsigned) {
      for (std::size_t b = b0; b < b1; ++b)
        for (std::size_t o = 0; o < out_; ++o) {
          T* yr = &y(b, o, 0);
          std::fill(yr, yr + len, bias.value[o]);
          for (std::size_t i = 0; i < in_; ++i) {
            const T* xr = &x(b, i, 0);
            const T* w = &weight.value[(o * in_ + i) * kWidth];
            if (len == 0) continue;
            // k = 0 reads x[t - 1], k = 2 reads x[t + 1]
            for (std::size_t t = 1; t < len; ++t) yr[t] += w[0] * xr[t - 1];
            for (std::size_t t = 0; t < len; ++t) yr[t] += w[1] * xr[t];
            for (std::size_t t = 0; t + 1 < len; ++t) yr[t] += w[2] * xr[t + 1];
          }
        }
    });
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x) {
    input_ = x;
    return infer(x);
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const Tensor<T>& x = input_;
    require(gy.batch == x.batch && gy.channels == out_ && gy.length == x.length, "conv1d: gradient shape mismatch");
    const std::size_t len = x.length;
    Tensor<T> gx(x.batch, in_, len);
    const unsigned shards = std::max(1u, std::min<unsigned>(threads_, static_cast<unsigned>(std::max<std::size_t>(x.batch, 1))));
    std::vector<std::vector<T>> gw(shards, std::vector<T>(weight.size(), T(0)));
    std::vector<std::vector<T>> gb(shards, std::vector<T>(bias.size(), T(0)));

    for_each_shard(x.batch, shards, [&](std::size_t b0, std::size_t b1, unsigned s) {
      for (std::size_t b = b0; b < b1; ++b)
        for (std::size_t o = 0; o < out_; ++o) {
          const T* g = &gy(b, o, 0);
          T acc = 0;
          for (std::size_t t = 0; t < len; ++t) acc += g[t];
          gb[s][o] += acc;
          for (std::size_t i = 0; i < in_; ++i) {
            const T* xr = &x(b, i, 0);
            T* gxr = &gx(b, i, 0);
            const T* w = &weight.value[(o * in_ + i) * kWidth];
            T* dw = &gw[s][(o * in_ + i) * kWidth];
            T a0 = 0, a1 = 0, a2 = 0;
            for (std::size_t t = 1; t < len; ++t) a0 += g[t] * xr[t - 1];
            for (std::size_t t = 0; t < len; ++t) a1 += g[t] * xr[t];
            for (std::size_t t = 0; t + 1 < len; ++t) a2 += g[t] * xr[t + 1];
            dw[0] += a0;
            dw[1] += a1;
            dw[2] += a2;
            for (std::size_t t = 1; t < len; ++t) gxr[t - 1] += w[0] * g[t];
            for (std::size_t t = 0; t < len; ++t) gxr[t] += w[1] * g[t];
            for (std::size_t t = 0; t + 1 < len; ++t) gxr[t + 1] += w[2] * g[t];
          }
        }
    });
    // Shard partials are reduced in shard order.
    for (unsigned s = 0; s < shards; ++s) {
      for (std::size_t j = 0; j < weight.size(); ++j) weight.grad[j] += gw[s][j];
      for (std::size_t j = 0; j < bias.size(); ++j) bias.grad[j] += gb[s][j];
    }
    return gx;
  }

  std::vector<Param<T>*> params() { return {&weight, &bias}; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  unsigned threads_ = 1;
  Tensor<T> input_;

 public:
  Param<T> weight;  // [out][in][3]
  Param<T> bias;
};

// ---------------------------------------------------------------------------

/// Non-overlapping max pooling. Ties go to the lowest index.
template <typename T>
class MaxPool1d {
 public:
  explicit MaxPool1d(std::size_t width = 3) : width_(width) {}

  std::size_t width() const noexcept { return width_; }

  Tensor<T> infer(const Tensor<T>& x) const {
    std::vector<std::uint32_t> unused;
    return pool(x, unused);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    in_batch_ = x.batch;
    in_channels_ = x.channels;
    in_length_ = x.length;
    return pool(x, argmax_);
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    require(gy.batch == in_batch_ && gy.channels == in_channels_ && gy.length * width_ == in_length_,
            "maxpool: gradient shape mismatch");
    Tensor<T> gx(in_batch_, in_channels_, in_length_);
    for (std::size_t j = 0; j < gy.size(); ++j) gx.data[argmax_[j]] += gy.data[j];
    return gx;
  }

 private:
  Tensor<T> pool(const Tensor<T>& x, std::vector<std::uint32_t>& argmax) const {
    require(width_ > 0 && x.length % width_ == 0,
            "maxpool: length " + std::to_string(x.length) + " not divisible by " + std::to_string(width_));
    Tensor<T> y(x.batch, x.channels, x.length / width_);
    argmax.resize(y.size());
    for (std::size_t r = 0; r < x.batch * x.channels; ++r) {
      const T* xr = x.data.data() + r * x.length;
      for (std::size_t t = 0; t < y.length; ++t) {
        std::size_t best = t * width_;
        for (std::size_t k = 1; k < width_ && !std::isnan(xr[best]); ++k)
          if (!(xr[t * width_ + k] <= xr[best])) best = t * width_ + k;  // NaN wins
        y.data[r * y.length + t] = xr[best];
        argmax[r * y.length + t] = static_cast<std::uint32_t>(r * x.length + best);
      }
    }
    return y;
  }

  std::size_t width_;
  std::size_t in_batch_ = 0, in_channels_ = 0, in_length_ = 0;
  std::vector<std::uint32_t> argmax_;
};

// ---------------------------------------------------------------------------

/// Per-channel batch normalization over (batch, length). Running statistics
/// follow running = momentum * running + (1 - momentum) * batch.
template <typename T>
class BatchNorm1d {
 public:
  BatchNorm1d() = default;
  BatchNorm1d(std::size_t channels, T momentum = T(0.9), T epsilon = T(1e-5))
      : channels_(channels),
        momentum_(momentum),
        epsilon_(epsilon),
        gamma(channels),
        beta(channels),
        running_mean(channels, T(0)),
        running_var(channels, T(1)) {
    std::fill(gamma.value.begin(), gamma.value.end(), T(1));
  }

  std::size_t channels() const noexcept { return channels_; }
  T momentum() const noexcept { return momentum_; }
  T epsilon() const noexcept { return epsilon_; }

  Tensor<T> infer(const Tensor<T>& x) const {
    require(x.channels == channels_, "batchnorm: channel mismatch");
    Tensor<T> y(x.batch, x.channels, x.length);
    for (std::size_t c = 0; c < channels_; ++c) {
      const T scale = gamma.value[c] / std::sqrt(running_var[c] + epsilon_);
      const T shift = beta.value[c] - running_mean[c] * scale;
      for (std::size_t b = 0; b < x.batch; ++b)
        for (std::size_t t = 0; t < x.length; ++t) y(b, c, t) = x(b, c, t) * scale + shift;
    }
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    mode_ = mode;
    if (mode == Mode::eval) {
      input_ = x;
      return infer(x);
    }
    require(x.channels == channels_, "batchnorm: channel mismatch");
    if (x.batch < 2) throw DegenerateBatch("batch normalization needs at least 2 samples in training mode");
    const std::size_t m = x.batch * x.length;
    xhat_ = Tensor<T>(x.batch, x.channels, x.length);
    inv_std_.assign(channels_, T(0));
    Tensor<T> y(x.batch, x.channels, x.length);
    for (std::size_t c = 0; c < channels_; ++c) {
      T mean = 0;
      for (std::size_t b = 0; b < x.batch; ++b)
        for (std::size_t t = 0; t < x.length; ++t) mean += x(b, c, t);
      mean /= static_cast<T>(m);
      T var = 0;
      for (std::size_t b = 0; b < x.batch; ++b)
        for (std::size_t t = 0; t < x.length; ++t) {
          const T d = x(b, c, t) - mean;
          var += d * d;
        }
      const T biased = var / static_cast<T>(m);
      const T unbiased = var / static_cast<T>(m - 1);
      const T inv = T(1) / std::sqrt(biased + epsilon_);
      inv_std_[c] = inv;
      for (std::size_t b = 0; b < x.batch; ++b)
        for (std::size_t t = 0; t < x.length; ++t) {
          const T xh = (x(b, c, t) - mean) * inv;
          xhat_(b, c, t) = xh;
          y(b, c, t) = gamma.value[c] * xh + beta.value[c];
        }
      running_mean[c] = momentum_ * running_mean[c] + (T(1) - momentum_) * mean;
      running_var[c] = momentum_ * running_var[c] + (T(1) - momentum_) * unbiased;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.batch, gy.channels, gy.length);
    if (mode_ == Mode::eval) {
      for (std::size_t c = 0; c < channels_; ++c) {
        const T inv = T(1) / std::sqrt(running_var[c] + epsilon_);
        for (std::size_t b = 0; b < gy.batch; ++b)
          for (std::size_t t = 0; t < gy.length; ++t) {
            const T xh = (input_(b, c, t) - running_mean[c]) * inv;
            gamma.grad[c] += gy(b, c, t) * xh;
            beta.grad[c] += gy(b, c, t);
            gx(b, c, t) = gy(b, c, t) * gamma.value[c] * inv;
          }
      }
      return gx;
    }
    require(gy.same_shape(xhat_), "batchnorm: gradient shape mismatch");
    const T m = static_cast<T>(gy.batch * gy.length);
    for (std::size_t c = 0; c < channels_; ++c) {
      T sum_g = 0, sum_gx = 0;
      for (std::size_t b = 0; b < gy.batch; ++b)
        for (std::size_t t = 0; t < gy.length; ++t) {
          sum_g += gy(b, c, t);
          sum_gx += gy(b, c, t) * xhat_(b, c, t);
        }
      gamma.grad[c] += sum_gx;
      beta.grad[c] += sum_g;
      const T k = gamma.value[c] * inv_std_[c];
      for (std::size_t b = 0; b < gy.batch; ++b)
        for (std::size_t t = 0; t < gy.length; ++t)
          gx(b, c, t) = k * (gy(b, c, t) - sum_g / m - xhat_(b, c, t) * sum_gx / m);
    }
    return gx;
  }

  std::vector<Param<T>*> params() { return {&gamma, &beta}; }

 private:
  std::size_t channels_ = 0;
  T momentum_ = T(0.9);
  T epsilon_ = T(1e-5);
  Mode mode_ = Mode::train;
  Tensor<T> input_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;

 public:
  Param<T> gamma;
  Param<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
};

// ---------------------------------------------------------------------------

/// Fully connected layer on the flattened sample; output shape (batch, out, 1).
template <typename T>
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t in, std::size_t out) : in_(in), out_(out), weight(out * in), bias(out) {}

  void initialize(std::mt19937_64& gen) {
    fan_in_uniform(weight.value, in_, gen);
    fan_in_uniform(bias.value, in_, gen);
  }

  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }

  Tensor<T> infer(const Tensor<T>& x) const {
    require(x.sample_size() == in_, "dense: expected " + std::to_string(in_) + " features, got " +
                                        std::to_string(x.sample_size()));
    Tensor<T> y(x.batch, out_, 1);
    for (std::size_t b = 0; b < x.batch; ++b) {
      const T* xs = x.sample(b);
      for (std::size_t o = 0; o < out_; ++o) {
        const T* w = &weight.value[o * in_];
        T acc = bias.value[o];
        for (std::size_t i = 0; i < in_; ++i) acc += w[i] * xs[i];
        y(b, o, 0) = acc;
      }
    }
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x) {
    input_ = x;
    return infer(x);
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    require(gy.batch == input_.batch && gy.sample_size() == out_, "dense: gradient shape mismatch");
    Tensor<T> gx(input_.batch, input_.channels, input_.length);
    for (std::size_t b = 0; b < gy.batch; ++b) {
      const T* xs = input_.sample(b);
      T* gxs = gx.sample(b);
      for (std::size_t o = 0; o < out_; ++o) {
        const T g = gy.data[b * out_ + o];
        bias.grad[o] += g;
        T* dw = &weight.grad[o * in_];
        const T* w = &weight.value[o * in_];
        for (std::size_t i = 0; i < in_; ++i) {
          dw[i] += g * xs[i];
          gxs[i] += g * w[i];
        }
      }
    }
    return gx;
  }

  std::vector<Param<T>*> params() { return {&weight, &bias}; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Tensor<T> input_;

 public:
  Param<T> weight;  // [out][in]
  Param<T> bias;
};

// ---------------------------------------------------------------------------

template <typename T>
class Relu {
 public:
  Tensor<T> infer(const Tensor<T>& x) const {
    Tensor<T> y = x;
    for (T& v : y.data) v = v < T(0) ? T(0) : v;  // NaN propagates
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x) {
    input_ = x;
    return infer(x);
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    require(gy.same_shape(input_), "relu: gradient shape mismatch");
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (!(input_.data[i] > T(0))) gx.data[i] = T(0);
    return gx;
  }

 private:
  Tensor<T> input_;
};

// ---------------------------------------------------------------------------

/// Inverted dropout: kept units are scaled by 1 / (1 - p) in training mode.
template <typename T>
class Dropout {
 public:
  explicit Dropout(T p = T(0.5)) : p_(p) {
    if (!(p >= T(0) && p < T(1))) throw InvalidArgument("dropout probability must be in [0, 1)");
  }

  T probability() const noexcept { return p_; }

  Tensor<T> infer(const Tensor<T>& x) const { return x; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode, std::mt19937_64& gen) {
    mode_ = mode;
    if (mode == Mode::eval) return x;
    mask_.resize(x.size());
    const T keep = T(1) / (T(1) - p_);
    for (T& m : mask_) m = unit_interval(gen()) >= static_cast<double>(p_) ? keep : T(0);
    return apply_mask(x);
  }

  /// Training-mode forward that reuses the previous mask.
  Tensor<T> forward_same_mask(const Tensor<T>& x) const {
    require(mask_.size() == x.size(), "dropout: no mask of matching size");
    return apply_mask(x);
  }

  Tensor<T> backward(const Tensor<T>& gy) const {
    if (mode_ == Mode::eval) return gy;
    require(mask_.size() == gy.size(), "dropout: gradient shape mismatch");
    return apply_mask(gy);
  }

 private:
  Tensor<T> apply_mask(const Tensor<T>& x) const {
    Tensor<T> y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= mask_[i];
    return y;
  }

  T p_;
  Mode mode_ = Mode::train;
  std::vector<T> mask_;
};

// ---------------------------------------------------------------------------

inline constexpr double kProbabilityFloor = 1e-12;

/// Row-wise softmax over the flattened sample.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> p = logits;
  const std::size_t n = logits.sample_size();
  for (std::size_t b = 0; b < logits.batch; ++b) {
    T* row = p.sample(b);
    T mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    T z = 0;
    for (std::size_t j = 0; j < n; ++j) z += (row[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) row[j] /= z;
  }
  return p;
}

/// -log pred[label], with pred clamped from below at 1e-12.
template <typename T>
T cross_entropy(std::span<const T> pred, std::size_t label) {
  require(label < pred.size(), "cross_entropy: label out of range");
  return -std::log(std::max(pred[label], static_cast<T>(kProbabilityFloor)));
}

/// d/dpred of cross_entropy (zero where the clamp is active).
template <typename T>
std::vector<T> cross_entropy_grad(std::span<const T> pred, std::size_t label) {
  require(label < pred.size(), "cross_entropy: label out of range");
  std::vector<T> g(pred.size(), T(0));
  if (pred[label] > static_cast<T>(kProbabilityFloor)) g[label] = -T(1) / pred[label];
  return g;
}

/// Softmax followed by batch-mean cross-entropy.
template <typename T>
class SoftmaxCrossEntropy {
 public:
  T forward(const Tensor<T>& logits, std::span<const int> labels) {
    require(labels.size() == logits.batch, "cross_entropy: label count mismatch");
    probs_ = softmax(logits);
    labels_.assign(labels.begin(), labels.end());
    T loss = 0;
    for (std::size_t b = 0; b < logits.batch; ++b)
      loss += cross_entropy<T>(std::span<const T>(probs_.sample(b), probs_.sample_size()),
                               static_cast<std::size_t>(labels[b]));
    return logits.batch ? loss / static_cast<T>(logits.batch) : T(0);
  }

  /// (p - onehot(label)) / batch
  Tensor<T> backward() const {
    Tensor<T> g = probs_;
    const T inv = g.batch ? T(1) / static_cast<T>(g.batch) : T(0);
    for (std::size_t b = 0; b < g.batch; ++b) {
      T* row = g.sample(b);
      row[labels_[b]] -= T(1);
      for (std::size_t j = 0; j < g.sample_size(); ++j) row[j] *= inv;
    }
    return g;
  }

  const Tensor<T>& probabilities() const noexcept { return probs_; }

 private:
  Tensor<T> probs_;
  std::vector<int> labels_;
};

// ---------------------------------------------------------------------------

/// Identity forward; multiplies the upstream gradient by -lambda.
template <typename T>
struct GradientReversal {
  T lambda = T(1);

  Tensor<T> forward(const Tensor<T>& x) const { return x; }
  Tensor<T> backward(const Tensor<T>& gy) const {
    Tensor<T> gx = gy;
    for (T& v : gx.data) v *= -lambda;
    return gx;
  }
};

}  // namespace mbl::nn

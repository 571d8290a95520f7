#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mbl/errors.hpp"

namespace mbl::nn {

enum class Mode { train, eval };

/// Dense batch x channels x length array, row-major. Fully connected layers
/// view a sample as a flat vector of channels * length features.
template <typename T>
struct Tensor {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(std::size_t b, std::size_t c, std::size_t l, T fill = T(0))
      : batch(b), channels(c), length(l), data(b * c * l, fill) {}

  std::size_t size() const noexcept { return data.size(); }
  std::size_t sample_size() const noexcept { return channels * length; }

  T& operator()(std::size_t b, std::size_t c, std::size_t t) { return data[(b * channels + c) * length + t]; }
  const T& operator()(std::size_t b, std::size_t c, std::size_t t) const {
    return data[(b * channels + c) * length + t];
  }

  T* sample(std::size_t b) { return data.data() + b * sample_size(); }
  const T* sample(std::size_t b) const { return data.data() + b * sample_size(); }

  bool same_shape(const Tensor& o) const noexcept {
    return batch == o.batch && channels == o.channels && length == o.length;
  }

  bool all_finite() const {
    return std::all_of(data.begin(), data.end(), [](T v) { return std::isfinite(v); });
  }
};

/// Rows [begin, end) of the batch.
template <typename T>
Tensor<T> slice_batch(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  if (begin > end || end > x.batch) throw InvalidArgument("batch slice out of range");
  Tensor<T> out(end - begin, x.channels, x.length);
  std::copy(x.sample(begin), x.sample(begin) + (end - begin) * x.sample_size(), out.data.begin());
  return out;
}

template <typename T>
Tensor<T> concat_batch(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.channels != b.channels || a.length != b.length) throw InvalidArgument("concat of mismatched tensors");
  Tensor<T> out(a.batch + b.batch, a.channels, a.length);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

template <typename T>
struct Param {
  std::vector<T> value;
  std::vector<T> grad;

  Param() = default;
  explicit Param(std::size_t n) : value(n, T(0)), grad(n, T(0)) {}
  std::size_t size() const noexcept { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace mbl::nn

#pragma once

// Little-endian stream helpers shared by the record and checkpoint formats.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>

#include "mbl/errors.hpp"

namespace mbl::io {

template <typename T>
concept Scalar = std::is_arithmetic_v<T>;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <Scalar T>
  void put(T value) {
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out_.write(bytes.data(), sizeof(T));
    written_ += sizeof(T);
  }

  template <Scalar T>
  void put_array(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
      written_ += values.size_bytes();
    } else {
      for (T v : values) put(v);
    }
  }

  void put_bytes(std::string_view bytes) {
    out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    written_ += bytes.size();
  }

  std::uint64_t written() const noexcept { return written_; }

 private:
  std::ostream& out_;
  std::uint64_t written_ = 0;
};

/// Reads fail with FormatError(`short_kind`) when the stream ends early.
class Reader {
 public:
  Reader(std::istream& in, FormatErrorKind short_kind) : in_(in), short_kind_(short_kind) {}

  void set_short_kind(FormatErrorKind kind) noexcept { short_kind_ = kind; }

  template <Scalar T>
  T get() {
    std::array<char, sizeof(T)> bytes;
    read_exact(bytes.data(), sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
  }

  template <Scalar T>
  void get_array(std::span<T> out) {
    if constexpr (std::endian::native == std::endian::little) {
      read_exact(reinterpret_cast<char*>(out.data()), out.size_bytes());
    } else {
      for (T& v : out) v = get<T>();
    }
  }

  std::string get_bytes(std::size_t n) {
    std::string s(n, '\0');
    read_exact(s.data(), n);
    return s;
  }

  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }
  std::uint64_t consumed() const noexcept { return consumed_; }

 private:
  void read_exact(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw FormatError(short_kind_, "unexpected end of data at byte " + std::to_string(consumed_));
    consumed_ += n;
  }

  std::istream& in_;
  FormatErrorKind short_kind_;
  std::uint64_t consumed_ = 0;
};

}  // namespace mbl::io

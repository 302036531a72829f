#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace topomacro {

/// P x P x 3 color patch with values in [0,1], stored flattened as
/// (row, column, channel). Immutable after construction; copies share storage.
class AppearancePatch {
 public:
  AppearancePatch() : data_(std::make_shared<const std::vector<double>>()) {}

  AppearancePatch(int size, std::vector<double> values) : size_(size) {
    if (size < 0 || values.size() != static_cast<std::size_t>(size * size * 3)) {
      throw Error(ErrorKind::ShapeMismatch, "patch of size " + std::to_string(size) + " needs " +
                                                std::to_string(size * size * 3) + " values, got " +
                                                std::to_string(values.size()));
    }
    data_ = std::make_shared<const std::vector<double>>(std::move(values));
  }

  int size() const { return size_; }
  std::span<const double> values() const { return *data_; }

  friend bool operator==(const AppearancePatch& a, const AppearancePatch& b) {
    return a.size_ == b.size_ && *a.data_ == *b.data_;
  }

 private:
  int size_ = 0;
  std::shared_ptr<const std::vector<double>> data_;
};

/// Each double as 16 lowercase hex digits of its IEEE-754 bit pattern, so
/// text round-trips are bit-exact.
inline std::string encode_hex(std::span<const double> values) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(values.size() * 16);
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int shift = 60; shift >= 0; shift -= 4) out.push_back(digits[(bits >> shift) & 0xf]);
  }
  return out;
}

inline std::vector<double> decode_hex(std::string_view hex) {
  if (hex.size() % 16 != 0) throw Error(ErrorKind::ParseError, "hex payload length not a multiple of 16");
  std::vector<double> out;
  out.reserve(hex.size() / 16);
  for (std::size_t i = 0; i < hex.size(); i += 16) {
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < 16; ++k) {
      const char c = hex[i + k];
      int d;
      if (c >= '0' && c <= '9') d = c - '0';
      else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
      else throw Error(ErrorKind::ParseError, std::string("bad hex digit '") + c + "'");
      bits = (bits << 4) | static_cast<std::uint64_t>(d);
    }
    out.push_back(std::bit_cast<double>(bits));
  }
  return out;
}

inline AppearancePatch decode_patch(std::string_view hex) {
  auto values = decode_hex(hex);
  const auto pixels = values.size() / 3;
  const int size = static_cast<int>(std::lround(std::sqrt(static_cast<double>(pixels))));
  return AppearancePatch(size, std::move(values));
}

}  // namespace topomacro

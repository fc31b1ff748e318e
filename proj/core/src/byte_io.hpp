#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "evit/error.hpp"

namespace evit::detail {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
}

inline void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
inline void put_f32(std::string& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }

// Forward-only reader over a byte buffer; running off the end throws
// TruncatedPayload.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le() {
    need(sizeof(T));
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  float get_f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::TruncatedPayload,
                  "need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) +
                      ", have " + std::to_string(bytes_.size() - pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace evit::detail

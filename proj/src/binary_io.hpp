#pragma once

// Little-endian encoding helpers shared by the checkpoint and frame formats.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "dcan/error.hpp"

namespace dcan::detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class ByteWriter {
 public:
  template <typename U>
  void put(U value) {
    static_assert(std::is_trivially_copyable_v<U>);
    char bytes[sizeof(U)];
    std::memcpy(bytes, &value, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
    out_.append(bytes, sizeof(U));
  }

  void put_bytes(std::string_view bytes) { out_.append(bytes); }
  std::string take() && { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  template <typename U>
  U get() {
    static_assert(std::is_trivially_copyable_v<U>);
    char bytes[sizeof(U)];
    std::memcpy(bytes, take(sizeof(U)).data(), sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
    U value;
    std::memcpy(&value, bytes, sizeof(U));
    return value;
  }

  std::string_view take(std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw TruncatedFileError(what_ + " truncated at byte " + std::to_string(pos_) + " (needed " +
                               std::to_string(n) + " more bytes, " + std::to_string(bytes_.size() - pos_) +
                               " available)");
    }
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  std::string_view bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace dcan::detail

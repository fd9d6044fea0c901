// SPDX-License-Identifier: Apache-2.0
#pragma once

// Little-endian byte encoding shared by the dataset and checkpoint formats.

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "tarn/errors.hpp"

namespace tarn::detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

  std::string_view raw(std::size_t n, const char* what) {
    need(n, what);
    std::string_view out(bytes_.data() + pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    const std::size_t at = pos_;
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    const double v = std::bit_cast<double>(bits);
    if (!std::isfinite(v)) {
      throw DataError("non-finite " + std::string(what) + " at byte offset " + std::to_string(at));
    }
    return v;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw DataError("truncated file: " + std::string(what) + " needs " + std::to_string(n) +
                      " bytes at byte offset " + std::to_string(pos_) + ", " +
                      std::to_string(bytes_.size() - pos_) + " available");
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace tarn::detail

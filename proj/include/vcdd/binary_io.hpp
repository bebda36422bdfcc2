#pragma once

// Little-endian / big-endian primitives shared by the sidecar, cache and dataset
// parsers. Readers track their byte offset so format errors can point at it.

#include "vcdd/common.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace vcdd::detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }

  void u32_le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void u32_be(std::uint32_t v) {
    for (int i = 3; i >= 0; --i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void u64_le(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void f64_le(double v) { u64_le(std::bit_cast<std::uint64_t>(v)); }
  void f32_le(float v) { u32_le(std::bit_cast<std::uint32_t>(v)); }

  void raw(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
  void raw(const std::string& s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string what) : data_(data), what_(std::move(what)) {}

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return data_.size() - pos_; }

  void need(std::uint64_t n, const char* field) const {
    if (remaining() < n)
      throw FormatError(what_ + ": truncated while reading " + field, pos_ + remaining());
  }

  std::uint8_t u8(const char* field) {
    need(1, field);
    return data_[pos_++];
  }

  std::uint32_t u32_be(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_ + i];
    pos_ += 4;
    return v;
  }

  std::uint32_t u32_le(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
    pos_ += 4;
    return v;
  }

  std::uint64_t u64_le(const char* field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
    pos_ += 8;
    return v;
  }

  double f64_le(const char* field) { return std::bit_cast<double>(u64_le(field)); }
  float f32_le(const char* field) { return std::bit_cast<float>(u32_le(field)); }

  std::span<const std::uint8_t> take(std::uint64_t n, const char* field) {
    need(n, field);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  [[noreturn]] void fail(const std::string& msg, std::uint64_t at) const { throw FormatError(what_ + ": " + msg, at); }

 private:
  std::span<const std::uint8_t> data_;
  std::string what_;
  std::uint64_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace vcdd::detail

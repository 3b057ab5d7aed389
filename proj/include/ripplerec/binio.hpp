#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ripplerec/errors.hpp"

namespace ripplerec {

// Explicit little-endian encoding, independent of host byte order. All
// archive blobs go through these helpers.
class BinWriter {
public:
  void u8(uint8_t v) { buf_.push_back(char(v)); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(char(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(char(v >> (8 * i)));
  }
  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(const void* data, size_t len) {
    buf_.append(static_cast<const char*>(data), len);
  }

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

private:
  std::string buf_;
};

class BinReader {
public:
  explicit BinReader(std::string_view data, std::string origin = "<memory>")
      : data_(data), origin_(std::move(origin)) {}

  uint8_t u8() { return static_cast<uint8_t>(byte()); }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(byte()) << (8 * i);
    return v;
  }
  uint64_t u64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(byte()) << (8 * i);
    return v;
  }
  int64_t i64() { return static_cast<int64_t>(u64()); }
  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    const uint32_t n = u32();
    if (pos_ + n > data_.size()) overrun();
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }
  void expect_end() const {
    if (!at_end()) throw CorruptionError(origin_ + ": trailing bytes");
  }

private:
  unsigned char byte() {
    if (pos_ >= data_.size()) overrun();
    return static_cast<unsigned char>(data_[pos_++]);
  }
  [[noreturn]] void overrun() const {
    throw CorruptionError(origin_ + ": truncated binary data");
  }

  std::string_view data_;
  size_t pos_ = 0;
  std::string origin_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

// Write to a sibling temp file, then rename over the target. Readers see
// either the old content or the new, never a torn write.
void atomic_write_file(const std::filesystem::path& path, std::string_view data);

}  // namespace ripplerec

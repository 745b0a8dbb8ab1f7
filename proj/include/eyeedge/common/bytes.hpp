#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eyeedge {

struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Endian { little, big };

// Append-only byte sink with explicit endianness.
class ByteWriter {
 public:
  explicit ByteWriter(Endian endian) : endian_(endian) {}

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void str16(std::string_view s) {
    if (s.size() > UINT16_MAX) throw std::length_error("string too long for u16 length prefix");
    u16(static_cast<std::uint16_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  std::vector<std::uint8_t>& buffer() { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) {
      const int shift = endian_ == Endian::little ? 8 * i : 8 * (n - 1 - i);
      buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  Endian endian_;
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked cursor over a byte span. Every read past the end throws.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, Endian endian) : data_(data), endian_(endian) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str16() {
    const auto n = u16();
    auto b = bytes(n);
    return {b.begin(), b.end()};
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw DecodeError("truncated input");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      const int shift = endian_ == Endian::little ? 8 * i : 8 * (n - 1 - i);
      v |= static_cast<std::uint64_t>(data_[pos_ + static_cast<std::size_t>(i)]) << shift;
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> data_;
  Endian endian_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> data);
std::string read_file_text(const std::string& path);
void write_file_text(const std::string& path, std::string_view text);

}  // namespace eyeedge

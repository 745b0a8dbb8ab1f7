#pragma once

// GZLM model container.
//
//   "GZLM" | u16 version | u8 dtype | u8 flags | str16 name
//   u8 input rank, u32 dims | u32 window | u32 layer count
//   per layer:  u8 kind, u8 padding, u8 activation, u8 0,
//               u32 kernel_h, kernel_w, stride, units, u8 param count,
//               per param: u8 rank, u32 dims, u8 storage, payload
//   masks (flags bit 0): per layer, per param: u8 tag [+ bitmap]
//   u32 CRC-32 of everything before it
//
// Integers and payloads are little-endian. Storage 0 is dense (n values);
// storage 1 (flags bit 1, sparse encoding) is a survivor bitmap followed by
// u32 count and the surviving values. Bitmaps are LSB-first, ceil(n/8) bytes.
// Mask tags: 0 none, 1 bitmap follows, 2 same as the storage bitmap.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eyeedge/nn/model.hpp"

namespace eyeedge::nn {

inline constexpr std::uint16_t kContainerVersion = 1;

enum class Encoding : std::uint8_t { dense = 0, sparse = 1 };

struct ContainerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IntegrityError : ContainerError {
  using ContainerError::ContainerError;
};

std::vector<std::uint8_t> encode_container(const ModelGraph& graph, Encoding encoding = Encoding::dense);
ModelGraph decode_container(std::span<const std::uint8_t> bytes);

// CRC-32 stored in the trailer; throws ContainerError if too short.
std::uint32_t container_checksum(std::span<const std::uint8_t> bytes);
// Recomputes the CRC over the body and compares with the trailer.
bool verify_container(std::span<const std::uint8_t> bytes);

void save_model(const ModelGraph& graph, const std::string& path, Encoding encoding = Encoding::dense);
ModelGraph load_model(const std::string& path);

std::vector<std::uint8_t> pack_bitmap(const Mask& mask);
Mask unpack_bitmap(std::span<const std::uint8_t> bits, std::size_t n);

}  // namespace eyeedge::nn

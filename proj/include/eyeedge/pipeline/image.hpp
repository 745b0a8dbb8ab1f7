#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "eyeedge/nn/tensor.hpp"

namespace eyeedge::pipeline {

// 8-bit interleaved image, 1 (grey) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool empty() const { return data.empty(); }
  friend bool operator==(const Image&, const Image&) = default;
};

struct ImageFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary PGM (P5, grey) and PPM (P6, RGB), maxval 255.
Image decode_pnm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_pnm(const Image& img);
Image read_pnm(const std::string& path);
void write_pnm(const std::string& path, const Image& img);

// BT.601 luma, integer round-half-up: (299 R + 587 G + 114 B + 500) / 1000.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);
Image to_greyscale(const Image& img);

// Bilinear with half-pixel centres: source = (dst + 0.5) * in / out - 0.5,
// clamped to the edge pixels; results rounded half up.
Image resize_bilinear(const Image& img, int out_w, int out_h);

Image crop(const Image& img, int x, int y, int w, int h);

// Grey image to an HxWx1 tensor of value / 255.
nn::Tensor normalize(const Image& grey);

}  // namespace eyeedge::pipeline

#include "eyeedge/pipeline/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string_view>

#include "eyeedge/common/bytes.hpp"

namespace eyeedge::pipeline {

Image::Image(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {
  if (w <= 0 || h <= 0 || (c != 1 && c != 3)) throw std::invalid_argument("image needs positive size, 1 or 3 channels");
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<std::uint8_t>& b) : b_(b) {}

  int next_int() {
    skip_space();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) throw ImageFormatError("PNM header: expected a number");
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > 1 << 20) throw ImageFormatError("PNM header: value too large");
    }
    return static_cast<int>(v);
  }
  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 2;
};

}  // namespace

Image decode_pnm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw ImageFormatError("not a binary PGM/PPM file");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader h(bytes);
  const int w = h.next_int();
  const int ht = h.next_int();
  const int maxval = h.next_int();
  if (w <= 0 || ht <= 0) throw ImageFormatError("PNM header: empty image");
  if (maxval != 255) throw ImageFormatError("PNM: only maxval 255 is supported");
  h.advance();  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(w) * ht * channels;
  if (bytes.size() < h.pos() + n) throw ImageFormatError("PNM raster truncated");
  Image img(w, ht, channels);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.pos()), n, img.data.begin());
  return img;
}

std::vector<std::uint8_t> encode_pnm(const Image& img) {
  const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

Image read_pnm(const std::string& path) {
  try {
    return decode_pnm(read_file_bytes(path));
  } catch (const ImageFormatError& e) {
    throw ImageFormatError(path + ": " + e.what());
  }
}

void write_pnm(const std::string& path, const Image& img) { write_file_bytes(path, encode_pnm(img)); }

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

Image to_greyscale(const Image& img) {
  if (img.channels == 1) return img;
  Image out(img.width, img.height, 1);
  for (std::size_t i = 0, n = out.data.size(); i < n; ++i) {
    out.data[i] = luma(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]);
  }
  return out;
}

namespace {

struct Tap {
  int lo = 0;
  int hi = 0;
  double frac = 0.0;
};

std::vector<Tap> taps(int in, int out) {
  std::vector<Tap> t(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int d = 0; d < out; ++d) {
    const double s = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(s));
    t[d] = {lo, std::min(lo + 1, in - 1), s - lo};
  }
  return t;
}

}  // namespace

Image resize_bilinear(const Image& img, int out_w, int out_h) {
  if (img.empty()) throw std::invalid_argument("resize of an empty image");
  if (out_w == img.width && out_h == img.height) return img;
  Image out(out_w, out_h, img.channels);
  const auto tx = taps(img.width, out_w);
  const auto ty = taps(img.height, out_h);
  for (int y = 0; y < out_h; ++y) {
    const Tap& a = ty[y];
    for (int x = 0; x < out_w; ++x) {
      const Tap& b = tx[x];
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(b.lo, a.lo, c) * (1 - b.frac) + img.at(b.hi, a.lo, c) * b.frac;
        const double bottom = img.at(b.lo, a.hi, c) * (1 - b.frac) + img.at(b.hi, a.hi, c) * b.frac;
        const double v = top * (1 - a.frac) + bottom * a.frac;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

Image crop(const Image& img, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > img.width || y + h > img.height) {
    throw std::out_of_range("crop rectangle outside the image");
  }
  Image out(w, h, img.channels);
  const std::size_t row = static_cast<std::size_t>(w) * img.channels;
  for (int r = 0; r < h; ++r) {
    const auto src = img.data.begin() + static_cast<std::ptrdiff_t>(((y + r) * img.width + x) * img.channels);
    std::copy_n(src, row, out.data.begin() + static_cast<std::ptrdiff_t>(r * row));
  }
  return out;
}

nn::Tensor normalize(const Image& grey) {
  if (grey.channels != 1) throw std::invalid_argument("normalize expects a greyscale image");
  nn::Tensor t({static_cast<std::size_t>(grey.height), static_cast<std::size_t>(grey.width), 1});
  auto v = t.values();
  for (std::size_t i = 0; i < grey.data.size(); ++i) v[i] = static_cast<float>(grey.data[i]) / 255.0f;
  return t;
}

}  // namespace eyeedge::pipeline

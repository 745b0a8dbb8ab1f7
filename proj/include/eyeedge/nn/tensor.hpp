#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eyeedge::nn {

enum class DType : std::uint8_t { f32 = 0, f16 = 1 };

const char* to_string(DType dtype);

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dense row-major array. Single-precision tensors own float values; half
// tensors own raw binary16 bits and are only ever read through widened().
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<float> values);
  static Tensor from_half_bits(Shape shape, std::vector<std::uint16_t> bits);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return dtype_ == DType::f32 ? f32_.size() : f16_.size(); }
  DType dtype() const { return dtype_; }
  std::size_t payload_bytes() const { return size() * (dtype_ == DType::f32 ? 4 : 2); }

  // Single precision access; throws std::logic_error on half tensors.
  std::span<float> values();
  std::span<const float> values() const;
  float& operator[](std::size_t i) { return values()[i]; }
  float operator[](std::size_t i) const { return values()[i]; }

  std::span<const std::uint16_t> half_bits() const;

  // Element read valid for either precision.
  float at(std::size_t i) const;
  std::vector<float> widened() const;

  Tensor to_single() const;
  Tensor reshaped(Shape shape) const;

  void fill(float v);

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  DType dtype_ = DType::f32;
  std::vector<float> f32_;
  std::vector<std::uint16_t> f16_;
};

}  // namespace eyeedge::nn

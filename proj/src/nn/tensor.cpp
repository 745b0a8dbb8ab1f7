#include "eyeedge/nn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "eyeedge/nn/half.hpp"

namespace eyeedge::nn {

const char* to_string(DType dtype) { return dtype == DType::f32 ? "f32" : "f16"; }

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), f32_(shape_size(shape_), 0.0f) {}

Tensor::Tensor(Shape shape, std::vector<float> values) : shape_(std::move(shape)), f32_(std::move(values)) {
  if (f32_.size() != shape_size(shape_)) {
    throw ShapeError("payload of " + std::to_string(f32_.size()) + " values does not match shape " +
                     shape_string(shape_));
  }
}

Tensor Tensor::from_half_bits(Shape shape, std::vector<std::uint16_t> bits) {
  if (bits.size() != shape_size(shape)) {
    throw ShapeError("half payload does not match shape " + shape_string(shape));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.dtype_ = DType::f16;
  t.f16_ = std::move(bits);
  return t;
}

std::span<float> Tensor::values() {
  if (dtype_ != DType::f32) throw std::logic_error("half tensor has no single-precision view; widen it first");
  return f32_;
}

std::span<const float> Tensor::values() const {
  if (dtype_ != DType::f32) throw std::logic_error("half tensor has no single-precision view; widen it first");
  return f32_;
}

std::span<const std::uint16_t> Tensor::half_bits() const {
  if (dtype_ != DType::f16) throw std::logic_error("tensor is not half precision");
  return f16_;
}

float Tensor::at(std::size_t i) const { return dtype_ == DType::f32 ? f32_.at(i) : half_to_float(f16_.at(i)); }

std::vector<float> Tensor::widened() const {
  if (dtype_ == DType::f32) return f32_;
  std::vector<float> out(f16_.size());
  std::transform(f16_.begin(), f16_.end(), out.begin(), half_to_float);
  return out;
}

Tensor Tensor::to_single() const {
  if (dtype_ == DType::f32) return *this;
  return Tensor(shape_, widened());
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

void Tensor::fill(float v) { std::fill(values().begin(), values().end(), v); }

}  // namespace eyeedge::nn

#pragma once

// Layer primitives: forward passes and their analytic backward passes.
// Spatial tensors are HxWxC row-major. Weight tensors must be single
// precision; half-precision parameters are widened by the caller.

#include <cstdint>
#include <vector>

#include "eyeedge/nn/tensor.hpp"

namespace eyeedge::nn {

enum class Padding : std::uint8_t { valid = 0, same = 1 };

struct ConvGeometry {
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  Padding padding = Padding::valid;
};

// Output extent along one axis and the leading pad, TensorFlow convention
// for `same` (extra padding goes to the bottom/right).
struct AxisPlan {
  std::size_t out = 0;
  std::size_t pad_before = 0;
};
AxisPlan plan_axis(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding);

// kernel: KhxKwxCxF, bias: F.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
                      Padding padding);
// kernels: KhxKwxC, bias: C.
Tensor depthwise_conv_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride,
                              Padding padding);
// kernel: 1x1xCxF, bias: F.
Tensor pointwise_conv_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias);
// weights: out x in, bias: out.
Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias);

struct PoolResult {
  Tensor output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};
PoolResult max_pool_forward(const Tensor& input, std::size_t size, std::size_t stride);

Tensor relu_forward(const Tensor& x);

struct ParamGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

ParamGrads conv2d_backward(const Tensor& input, const Tensor& kernel, std::size_t stride, Padding padding,
                           const Tensor& grad_out);
ParamGrads depthwise_conv_backward(const Tensor& input, const Tensor& kernels, std::size_t stride, Padding padding,
                                   const Tensor& grad_out);
ParamGrads pointwise_conv_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out);
ParamGrads dense_backward(const Tensor& x, const Tensor& weights, const Tensor& grad_out);
Tensor max_pool_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax, const Tensor& grad_out);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

// Recurrent cells. W: GxD, U: GxH, b: G where G = 3H (GRU gates z, r, candidate)
// or 4H (LSTM gates i, f, o, g).
struct RecurrentParams {
  const Tensor& w;
  const Tensor& u;
  const Tensor& b;
};

struct GruStepCache {
  std::vector<float> x, h, z, r, cand;
};
struct LstmStepCache {
  std::vector<float> x, h, c, i, f, o, g, c_next_tanh;
};

std::size_t recurrent_units(const RecurrentParams& p, std::size_t gates);

// h' = (1 - z) * h + z * cand, z = sigmoid(Wz x + Uz h + bz),
// r = sigmoid(Wr x + Ur h + br), cand = tanh(Wc x + Uc (r * h) + bc).
std::vector<float> gru_step(const std::vector<float>& x, const std::vector<float>& h, const RecurrentParams& p,
                            GruStepCache* cache = nullptr);

struct LstmState {
  std::vector<float> h;
  std::vector<float> c;
};
// c' = f * c + i * g, h' = o * tanh(c').
LstmState lstm_step(const std::vector<float>& x, const std::vector<float>& h, const std::vector<float>& c,
                    const RecurrentParams& p, LstmStepCache* cache = nullptr);

// Accumulating backward passes: parameter gradients are added into dw/du/db.
struct GruStepGrads {
  std::vector<float> dx;
  std::vector<float> dh;
};
GruStepGrads gru_step_backward(const GruStepCache& cache, const RecurrentParams& p, const std::vector<float>& dh_next,
                               Tensor& dw, Tensor& du, Tensor& db);

struct LstmStepGrads {
  std::vector<float> dx;
  std::vector<float> dh;
  std::vector<float> dc;
};
LstmStepGrads lstm_step_backward(const LstmStepCache& cache, const RecurrentParams& p,
                                 const std::vector<float>& dh_next, const std::vector<float>& dc_next, Tensor& dw,
                                 Tensor& du, Tensor& db);

}  // namespace eyeedge::nn

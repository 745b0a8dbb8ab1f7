#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eyeedge/common/gaze.hpp"
#include "eyeedge/nn/ops.hpp"
#include "eyeedge/nn/tensor.hpp"

namespace eyeedge::nn {

enum class LayerKind : std::uint8_t {
  conv2d = 0,
  depthwise_conv = 1,
  pointwise_conv = 2,
  dense = 3,
  max_pool = 4,
  activation = 5,
  flatten = 6,
  gru = 7,
  lstm = 8,
};

enum class Activation : std::uint8_t { linear = 0, relu = 1 };

const char* to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
  LayerKind kind = LayerKind::flatten;
  std::size_t kernel_h = 1;  // conv kernels; pool window uses kernel_h
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  Padding padding = Padding::valid;
  std::size_t units = 0;  // filters (conv2d/pointwise) or units (dense/gru/lstm)
  Activation activation = Activation::linear;

  bool parameterized() const;
  bool recurrent() const { return kind == LayerKind::gru || kind == LayerKind::lstm; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// 1 = surviving weight, 0 = pruned. Empty mask means "no mask".
using Mask = std::vector<std::uint8_t>;

struct Layer {
  LayerSpec spec;
  Shape input_shape;
  Shape output_shape;
  std::vector<Tensor> params;  // weights first, bias last
  std::vector<Mask> masks;     // empty, or one entry per param

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Index of the bias tensor in Layer::params; all other params are weights.
std::size_t bias_index(const Layer& layer);

struct ModelConfig {
  std::string name;  // cnn, cnn_gru, cnn_lstm (free-form for custom graphs)
  Shape input_shape{128, 128, 1};
  std::size_t window = 1;
  std::vector<LayerSpec> layers;
};

// Layers before the first recurrent layer run once per frame (time
// distributed); the recurrent layer consumes the per-frame embeddings in
// order; layers after it run on the final hidden state.
struct ModelGraph {
  std::string name;
  Shape input_shape;
  std::size_t window = 1;
  DType dtype = DType::f32;
  std::vector<Layer> layers;

  std::size_t recurrent_index() const;
  bool has_masks() const;
  friend bool operator==(const ModelGraph&, const ModelGraph&) = default;
};

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Output shape of one layer; throws ShapeError on incompatible input.
Shape layer_output_shape(const LayerSpec& spec, const Shape& input);
// Expected parameter shapes (weights first, bias last) for a layer.
std::vector<Shape> layer_param_shapes(const LayerSpec& spec, const Shape& input);

// Validates shapes and allocates parameters. Weights use He-style uniform
// init U(-sqrt(6/fan_in), sqrt(6/fan_in)) from the seed; biases are zero.
ModelGraph build_graph(const ModelConfig& config, std::uint64_t seed);

std::size_t param_count(const ModelGraph& graph);
std::size_t payload_bytes(const ModelGraph& graph);

// Single-precision copy for compute; a no-op copy for f32 graphs.
ModelGraph widen(const ModelGraph& graph);

// Per-frame part of the network (everything before the recurrent layer).
Tensor trunk_forward(const ModelGraph& graph, const Tensor& frame);
// Recurrent layer and head over an ordered sequence of trunk outputs.
Gaze head_forward(const ModelGraph& graph, std::span<const Tensor> embeddings);

// frames.size() must equal graph.window; each frame matches input_shape.
Gaze model_forward(const ModelGraph& graph, std::span<const Tensor> frames);

// Gradients laid out like ModelGraph::layers[i].params.
struct Gradients {
  std::vector<std::vector<Tensor>> layers;
  static Gradients zeros_like(const ModelGraph& graph);
  void scale(float s);
};

// Runs forward and backward for one example with loss ||pred - target||^2
// scaled by `loss_scale`, accumulating into `grads`. Returns the prediction.
// Requires a single-precision graph.
Gaze accumulate_gradients(const ModelGraph& graph, std::span<const Tensor* const> frames, const Gaze& target,
                          float loss_scale, Gradients& grads);

}  // namespace eyeedge::nn

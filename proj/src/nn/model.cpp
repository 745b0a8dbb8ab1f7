#include "eyeedge/nn/model.hpp"

#include <algorithm>
#include <cmath>

#include "eyeedge/common/rng.hpp"

namespace eyeedge::nn {

namespace {

struct LayerTrace {
  Tensor input;
  std::vector<std::uint32_t> argmax;
};

// Parameter access that widens half tensors into scratch storage.
const std::vector<Tensor>& compute_params(const Layer& layer, std::vector<Tensor>& scratch) {
  const bool all_single = std::all_of(layer.params.begin(), layer.params.end(),
                                      [](const Tensor& t) { return t.dtype() == DType::f32; });
  if (all_single) return layer.params;
  scratch.clear();
  for (const Tensor& t : layer.params) scratch.push_back(t.to_single());
  return scratch;
}

Tensor apply_layer(const Layer& layer, const std::vector<Tensor>& p, const Tensor& in, LayerTrace* trace) {
  const LayerSpec& s = layer.spec;
  if (trace) trace->input = in;
  switch (s.kind) {
    case LayerKind::conv2d:
      return conv2d_forward(in, p[0], p[1], s.stride, s.padding);
    case LayerKind::depthwise_conv:
      return depthwise_conv_forward(in, p[0], p[1], s.stride, s.padding);
    case LayerKind::pointwise_conv:
      return pointwise_conv_forward(in, p[0], p[1]);
    case LayerKind::dense:
      return dense_forward(in, p[0], p[1]);
    case LayerKind::max_pool: {
      PoolResult r = max_pool_forward(in, s.kernel_h, s.stride);
      if (trace) trace->argmax = std::move(r.argmax);
      return std::move(r.output);
    }
    case LayerKind::activation:
      return s.activation == Activation::relu ? relu_forward(in) : in;
    case LayerKind::flatten:
      return in.reshaped({in.size()});
    case LayerKind::gru:
    case LayerKind::lstm:
      break;
  }
  throw std::logic_error("recurrent layer applied as a feed-forward layer");
}

Tensor backward_layer(const Layer& layer, const LayerTrace& trace, const Tensor& grad_out,
                      std::vector<Tensor>& grads) {
  const LayerSpec& s = layer.spec;
  const auto& p = layer.params;
  auto add = [](Tensor& dst, const Tensor& src) {
    auto d = dst.values();
    const auto v = src.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += v[i];
  };
  switch (s.kind) {
    case LayerKind::conv2d: {
      ParamGrads g = conv2d_backward(trace.input, p[0], s.stride, s.padding, grad_out);
      add(grads[0], g.weights);
      add(grads[1], g.bias);
      return std::move(g.input);
    }
    case LayerKind::depthwise_conv: {
      ParamGrads g = depthwise_conv_backward(trace.input, p[0], s.stride, s.padding, grad_out);
      add(grads[0], g.weights);
      add(grads[1], g.bias);
      return std::move(g.input);
    }
    case LayerKind::pointwise_conv: {
      ParamGrads g = pointwise_conv_backward(trace.input, p[0], grad_out);
      add(grads[0], g.weights);
      add(grads[1], g.bias);
      return std::move(g.input);
    }
    case LayerKind::dense: {
      ParamGrads g = dense_backward(trace.input, p[0], grad_out);
      add(grads[0], g.weights);
      add(grads[1], g.bias);
      return std::move(g.input);
    }
    case LayerKind::max_pool:
      return max_pool_backward(trace.input.shape(), trace.argmax, grad_out);
    case LayerKind::activation:
      return s.activation == Activation::relu ? relu_backward(trace.input, grad_out) : grad_out;
    case LayerKind::flatten:
      return grad_out.reshaped(trace.input.shape());
    case LayerKind::gru:
    case LayerKind::lstm:
      break;
  }
  throw std::logic_error("recurrent layer in feed-forward backward");
}

Shape infer_output(const LayerSpec& s, const Shape& in) {
  auto need_rank = [&](std::size_t r) {
    if (in.size() != r) {
      throw ShapeError(std::string(to_string(s.kind)) + " expects rank " + std::to_string(r) + " input, got " +
                       shape_string(in));
    }
  };
  switch (s.kind) {
    case LayerKind::conv2d: {
      need_rank(3);
      const auto py = plan_axis(in[0], s.kernel_h, s.stride, s.padding);
      const auto px = plan_axis(in[1], s.kernel_w, s.stride, s.padding);
      return {py.out, px.out, s.units};
    }
    case LayerKind::depthwise_conv: {
      need_rank(3);
      const auto py = plan_axis(in[0], s.kernel_h, s.stride, s.padding);
      const auto px = plan_axis(in[1], s.kernel_w, s.stride, s.padding);
      return {py.out, px.out, in[2]};
    }
    case LayerKind::pointwise_conv:
      need_rank(3);
      return {in[0], in[1], s.units};
    case LayerKind::max_pool: {
      need_rank(3);
      const auto py = plan_axis(in[0], s.kernel_h, s.stride, Padding::valid);
      const auto px = plan_axis(in[1], s.kernel_h, s.stride, Padding::valid);
      return {py.out, px.out, in[2]};
    }
    case LayerKind::activation:
      return in;
    case LayerKind::flatten:
      return {shape_size(in)};
    case LayerKind::dense:
    case LayerKind::gru:
    case LayerKind::lstm:
      need_rank(1);
      return {s.units};
  }
  throw ShapeError("unknown layer kind");
}

// Parameter shapes with their fan-in for initialisation.
std::vector<std::pair<Shape, std::size_t>> param_shapes(const LayerSpec& s, const Shape& in) {
  switch (s.kind) {
    case LayerKind::conv2d:
      return {{{s.kernel_h, s.kernel_w, in[2], s.units}, s.kernel_h * s.kernel_w * in[2]}, {{s.units}, 0}};
    case LayerKind::depthwise_conv:
      return {{{s.kernel_h, s.kernel_w, in[2]}, s.kernel_h * s.kernel_w}, {{in[2]}, 0}};
    case LayerKind::pointwise_conv:
      return {{{1, 1, in[2], s.units}, in[2]}, {{s.units}, 0}};
    case LayerKind::dense:
      return {{{s.units, in[0]}, in[0]}, {{s.units}, 0}};
    case LayerKind::gru:
    case LayerKind::lstm: {
      const std::size_t g = (s.kind == LayerKind::gru ? 3 : 4) * s.units;
      return {{{g, in[0]}, in[0]}, {{g, s.units}, s.units}, {{g}, 0}};
    }
    default:
      return {};
  }
}

void check_finite(const Gaze& g) {
  if (!std::isfinite(g.x) || !std::isfinite(g.y)) {
    throw NonFiniteError("model produced a non-finite output; parameters are likely corrupt");
  }
}

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::depthwise_conv: return "depthwise_conv";
    case LayerKind::pointwise_conv: return "pointwise_conv";
    case LayerKind::dense: return "dense";
    case LayerKind::max_pool: return "max_pool";
    case LayerKind::activation: return "activation";
    case LayerKind::flatten: return "flatten";
    case LayerKind::gru: return "gru";
    case LayerKind::lstm: return "lstm";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(LayerKind::lstm); ++k) {
    if (s == to_string(static_cast<LayerKind>(k))) return static_cast<LayerKind>(k);
  }
  throw std::invalid_argument("unknown layer kind '" + s + "'");
}

Shape layer_output_shape(const LayerSpec& spec, const Shape& input) { return infer_output(spec, input); }

std::vector<Shape> layer_param_shapes(const LayerSpec& spec, const Shape& input) {
  std::vector<Shape> out;
  for (auto& [shape, fan_in] : param_shapes(spec, input)) out.push_back(shape);
  return out;
}

bool LayerSpec::parameterized() const {
  switch (kind) {
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv:
    case LayerKind::pointwise_conv:
    case LayerKind::dense:
    case LayerKind::gru:
    case LayerKind::lstm:
      return true;
    default:
      return false;
  }
}

std::size_t bias_index(const Layer& layer) { return layer.params.empty() ? 0 : layer.params.size() - 1; }

std::size_t ModelGraph::recurrent_index() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].spec.recurrent()) return i;
  }
  return layers.size();
}

bool ModelGraph::has_masks() const {
  return std::any_of(layers.begin(), layers.end(), [](const Layer& l) { return !l.masks.empty(); });
}

ModelGraph build_graph(const ModelConfig& config, std::uint64_t seed) {
  if (config.window == 0) throw std::invalid_argument("window must be at least 1");
  ModelGraph g;
  g.name = config.name;
  g.input_shape = config.input_shape;
  g.window = config.window;
  Rng rng(seed);

  Shape shape = config.input_shape;
  std::size_t recurrent_layers = 0;
  for (const LayerSpec& spec : config.layers) {
    if (spec.recurrent()) ++recurrent_layers;
    if (spec.parameterized() && spec.kind != LayerKind::depthwise_conv && spec.units == 0) {
      throw std::invalid_argument(std::string(to_string(spec.kind)) + " layer needs a positive unit/filter count");
    }
    Layer layer;
    layer.spec = spec;
    layer.input_shape = shape;
    layer.output_shape = infer_output(spec, shape);
    for (const auto& [pshape, fan_in] : param_shapes(spec, shape)) {
      Tensor t(pshape);
      if (fan_in > 0) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (float& v : t.values()) v = static_cast<float>(rng.uniform(-limit, limit));
      }
      layer.params.push_back(std::move(t));
    }
    shape = layer.output_shape;
    g.layers.push_back(std::move(layer));
  }
  if (recurrent_layers > 1) throw std::invalid_argument("at most one recurrent layer is supported");
  if (recurrent_layers == 0 && config.window != 1) {
    throw std::invalid_argument("feed-forward models take exactly one frame (window = 1)");
  }
  if (shape != Shape{2}) {
    throw ShapeError("model output must be 2 units (x_cm, y_cm), got " + shape_string(shape));
  }
  return g;
}

std::size_t param_count(const ModelGraph& graph) {
  std::size_t n = 0;
  for (const Layer& l : graph.layers) {
    for (const Tensor& t : l.params) n += t.size();
  }
  return n;
}

std::size_t payload_bytes(const ModelGraph& graph) {
  std::size_t n = 0;
  for (const Layer& l : graph.layers) {
    for (const Tensor& t : l.params) n += t.payload_bytes();
  }
  return n;
}

ModelGraph widen(const ModelGraph& graph) {
  ModelGraph g = graph;
  g.dtype = DType::f32;
  for (Layer& l : g.layers) {
    for (Tensor& t : l.params) t = t.to_single();
  }
  return g;
}

Tensor trunk_forward(const ModelGraph& graph, const Tensor& frame) {
  if (frame.shape() != graph.input_shape) {
    throw ShapeError("frame shape " + shape_string(frame.shape()) + " does not match model input " +
                     shape_string(graph.input_shape));
  }
  const std::size_t r = graph.recurrent_index();
  std::vector<Tensor> scratch;
  Tensor x = frame.to_single();
  for (std::size_t i = 0; i < r; ++i) {
    x = apply_layer(graph.layers[i], compute_params(graph.layers[i], scratch), x, nullptr);
  }
  return x;
}

Gaze head_forward(const ModelGraph& graph, std::span<const Tensor> embeddings) {
  const std::size_t r = graph.recurrent_index();
  std::vector<Tensor> scratch;
  Tensor x;
  std::size_t start = r;
  if (r < graph.layers.size()) {
    if (embeddings.empty()) throw ShapeError("recurrent head needs at least one embedding");
    const Layer& rl = graph.layers[r];
    const auto& p = compute_params(rl, scratch);
    const RecurrentParams rp{p[0], p[1], p[2]};
    const std::size_t n = rl.spec.units;
    std::vector<float> h(n, 0.0f), c(n, 0.0f);
    for (const Tensor& e : embeddings) {
      std::vector<float> xv = e.widened();
      if (rl.spec.kind == LayerKind::gru) {
        h = gru_step(xv, h, rp);
      } else {
        LstmState s = lstm_step(xv, h, c, rp);
        h = std::move(s.h);
        c = std::move(s.c);
      }
    }
    x = Tensor({n}, std::move(h));
    start = r + 1;
  } else {
    if (embeddings.size() != 1) throw ShapeError("feed-forward head takes exactly one embedding");
    x = embeddings.front().to_single();
    start = r;
  }
  for (std::size_t i = start; i < graph.layers.size(); ++i) {
    x = apply_layer(graph.layers[i], compute_params(graph.layers[i], scratch), x, nullptr);
  }
  const auto v = x.values();
  Gaze out{v[0], v[1]};
  check_finite(out);
  return out;
}

Gaze model_forward(const ModelGraph& graph, std::span<const Tensor> frames) {
  if (frames.size() != graph.window) {
    throw ShapeError(graph.name + " expects a window of " + std::to_string(graph.window) + " frames, got " +
                     std::to_string(frames.size()));
  }
  if (graph.recurrent_index() == graph.layers.size()) {
    // Feed-forward: the whole graph is the per-frame trunk.
    std::vector<Tensor> scratch;
    if (frames[0].shape() != graph.input_shape) {
      throw ShapeError("frame shape " + shape_string(frames[0].shape()) + " does not match model input " +
                       shape_string(graph.input_shape));
    }
    Tensor x = frames[0].to_single();
    for (const Layer& l : graph.layers) x = apply_layer(l, compute_params(l, scratch), x, nullptr);
    const auto v = x.values();
    Gaze out{v[0], v[1]};
    check_finite(out);
    return out;
  }
  std::vector<Tensor> embeddings;
  embeddings.reserve(frames.size());
  for (const Tensor& f : frames) embeddings.push_back(trunk_forward(graph, f));
  return head_forward(graph, embeddings);
}

Gradients Gradients::zeros_like(const ModelGraph& graph) {
  Gradients g;
  for (const Layer& l : graph.layers) {
    std::vector<Tensor> ts;
    for (const Tensor& t : l.params) ts.emplace_back(t.shape());
    g.layers.push_back(std::move(ts));
  }
  return g;
}

void Gradients::scale(float s) {
  for (auto& layer : layers) {
    for (Tensor& t : layer) {
      for (float& v : t.values()) v *= s;
    }
  }
}

Gaze accumulate_gradients(const ModelGraph& graph, std::span<const Tensor* const> frames, const Gaze& target,
                          float loss_scale, Gradients& grads) {
  if (graph.dtype != DType::f32) throw std::logic_error("training requires a single-precision graph");
  if (frames.size() != graph.window) throw ShapeError("window size mismatch in training example");
  const std::size_t r = graph.recurrent_index();
  const std::size_t n_layers = graph.layers.size();
  const bool recurrent = r < n_layers;
  const std::size_t trunk_end = recurrent ? r : n_layers;

  // Per-frame trunk with traces.
  std::vector<std::vector<LayerTrace>> traces(frames.size(), std::vector<LayerTrace>(trunk_end));
  std::vector<Tensor> embeddings;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f]->shape() != graph.input_shape) throw ShapeError("training frame shape mismatch");
    Tensor x = *frames[f];
    for (std::size_t i = 0; i < trunk_end; ++i) {
      x = apply_layer(graph.layers[i], graph.layers[i].params, x, &traces[f][i]);
    }
    embeddings.push_back(std::move(x));
  }

  // Recurrent layer.
  std::vector<GruStepCache> gru_caches;
  std::vector<LstmStepCache> lstm_caches;
  Tensor x;
  std::size_t head_start = n_layers;
  if (recurrent) {
    const Layer& rl = graph.layers[r];
    const RecurrentParams rp{rl.params[0], rl.params[1], rl.params[2]};
    const std::size_t n = rl.spec.units;
    std::vector<float> h(n, 0.0f), c(n, 0.0f);
    for (const Tensor& e : embeddings) {
      std::vector<float> xv(e.values().begin(), e.values().end());
      if (rl.spec.kind == LayerKind::gru) {
        gru_caches.emplace_back();
        h = gru_step(xv, h, rp, &gru_caches.back());
      } else {
        lstm_caches.emplace_back();
        LstmState s = lstm_step(xv, h, c, rp, &lstm_caches.back());
        h = std::move(s.h);
        c = std::move(s.c);
      }
    }
    x = Tensor({n}, std::move(h));
    head_start = r + 1;
  } else {
    x = embeddings.front();
  }

  std::vector<LayerTrace> head_traces(n_layers);
  for (std::size_t i = head_start; i < n_layers; ++i) {
    x = apply_layer(graph.layers[i], graph.layers[i].params, x, &head_traces[i]);
  }
  const auto out = x.values();
  const Gaze pred{out[0], out[1]};
  check_finite(pred);

  // d/dpred of loss_scale * ||pred - target||^2
  Tensor grad({2}, {static_cast<float>(2.0 * loss_scale * (pred.x - target.x)),
                    static_cast<float>(2.0 * loss_scale * (pred.y - target.y))});
  for (std::size_t i = n_layers; i-- > head_start;) {
    grad = backward_layer(graph.layers[i], head_traces[i], grad, grads.layers[i]);
  }

  std::vector<Tensor> embedding_grads;
  if (recurrent) {
    const Layer& rl = graph.layers[r];
    const RecurrentParams rp{rl.params[0], rl.params[1], rl.params[2]};
    auto& g = grads.layers[r];
    const auto gv = grad.values();
    std::vector<float> dh(gv.begin(), gv.end());
    std::vector<float> dc(rl.spec.units, 0.0f);
    embedding_grads.resize(embeddings.size());
    for (std::size_t t = embeddings.size(); t-- > 0;) {
      std::vector<float> dx;
      if (rl.spec.kind == LayerKind::gru) {
        GruStepGrads sg = gru_step_backward(gru_caches[t], rp, dh, g[0], g[1], g[2]);
        dx = std::move(sg.dx);
        dh = std::move(sg.dh);
      } else {
        LstmStepGrads sg = lstm_step_backward(lstm_caches[t], rp, dh, dc, g[0], g[1], g[2]);
        dx = std::move(sg.dx);
        dh = std::move(sg.dh);
        dc = std::move(sg.dc);
      }
      embedding_grads[t] = Tensor(embeddings[t].shape(), std::move(dx));
    }
  } else {
    embedding_grads.push_back(std::move(grad));
  }

  for (std::size_t f = 0; f < frames.size(); ++f) {
    Tensor g = std::move(embedding_grads[f]);
    for (std::size_t i = trunk_end; i-- > 0;) {
      // The first layer's input gradient is never needed.
      g = backward_layer(graph.layers[i], traces[f][i], g, grads.layers[i]);
    }
  }
  return pred;
}

}  // namespace eyeedge::nn

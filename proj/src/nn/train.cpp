#include "eyeedge/nn/train.hpp"

#include <cmath>
#include <sstream>

#include "eyeedge/common/rng.hpp"

namespace eyeedge::nn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || !(decay >= 0) || batch_size == 0) {
    throw std::invalid_argument("train config needs learning_rate > 0, decay >= 0, batch_size > 0");
  }
}

std::size_t Dataset::frame_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.frames.size();
  return n;
}

std::vector<ExampleRef> enumerate_examples(const Dataset& data) {
  std::vector<ExampleRef> out;
  for (std::size_t s = 0; s < data.sequences.size(); ++s) {
    const Sequence& seq = data.sequences[s];
    if (seq.frames.size() != seq.labels.size()) {
      throw std::invalid_argument("sequence " + std::to_string(s) + " has mismatched frame/label counts");
    }
    for (std::size_t f = 0; f < seq.frames.size(); ++f) out.push_back({s, f});
  }
  return out;
}

std::vector<const Tensor*> example_window(const Dataset& data, const ExampleRef& ex, std::size_t window) {
  const Sequence& seq = data.sequences.at(ex.sequence);
  std::vector<const Tensor*> frames(window);
  for (std::size_t k = 0; k < window; ++k) {
    const std::size_t back = window - 1 - k;
    frames[k] = &seq.frames[ex.frame >= back ? ex.frame - back : 0];
  }
  return frames;
}

namespace {

struct AdamState {
  std::vector<std::vector<std::vector<float>>> m, v;
};

AdamState zero_state(const ModelGraph& g) {
  AdamState s;
  for (const Layer& l : g.layers) {
    std::vector<std::vector<float>> lm, lv;
    for (const Tensor& t : l.params) {
      lm.emplace_back(t.size(), 0.0f);
      lv.emplace_back(t.size(), 0.0f);
    }
    s.m.push_back(std::move(lm));
    s.v.push_back(std::move(lv));
  }
  return s;
}

void apply_masks(ModelGraph& g, Gradients* grads) {
  for (std::size_t li = 0; li < g.layers.size(); ++li) {
    Layer& l = g.layers[li];
    if (l.masks.empty()) continue;
    for (std::size_t pi = 0; pi < l.params.size(); ++pi) {
      const Mask& m = l.masks[pi];
      if (m.empty()) continue;
      auto w = l.params[pi].values();
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (!m[i]) {
          w[i] = 0.0f;
          if (grads) grads->layers[li][pi][i] = 0.0f;
        }
      }
    }
  }
}

}  // namespace

TrainResult train_adam(const ModelGraph& graph, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (graph.dtype != DType::f32) throw std::invalid_argument("training requires a single-precision graph");
  TrainResult result{graph, {}, 0};
  if (cfg.epochs == 0) return result;
  std::vector<ExampleRef> examples = enumerate_examples(data);
  if (examples.empty()) throw std::invalid_argument("training dataset is empty");

  ModelGraph& g = result.graph;
  AdamState adam = zero_state(g);
  Rng rng(cfg.seed);
  double beta1_pow = 1.0, beta2_pow = 1.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const ModelGraph epoch_start = g;
    rng.shuffle(examples);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < examples.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, examples.size());
      const float scale = 1.0f / static_cast<float>(end - start);
      Gradients grads = Gradients::zeros_like(g);
      double batch_loss = 0.0;
      for (std::size_t e = start; e < end; ++e) {
        const auto frames = example_window(data, examples[e], g.window);
        const Gaze& target = data.sequences[examples[e].sequence].labels[examples[e].frame];
        Gaze pred;
        try {
          pred = accumulate_gradients(g, frames, target, scale, grads);
        } catch (const NonFiniteError&) {
          pred = {NAN, NAN};
        }
        const double dx = pred.x - target.x, dy = pred.y - target.y;
        batch_loss += dx * dx + dy * dy;
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << ", step " << result.steps;
        throw TrainingDiverged(msg.str(), epoch_start);
      }
      loss_sum += batch_loss;
      apply_masks(g, &grads);

      const double lr = cfg.learning_rate / (1.0 + cfg.decay * static_cast<double>(result.steps));
      beta1_pow *= cfg.beta1;
      beta2_pow *= cfg.beta2;
      const double c1 = 1.0 - beta1_pow, c2 = 1.0 - beta2_pow;
      for (std::size_t li = 0; li < g.layers.size(); ++li) {
        for (std::size_t pi = 0; pi < g.layers[li].params.size(); ++pi) {
          auto w = g.layers[li].params[pi].values();
          const auto gr = grads.layers[li][pi].values();
          auto& m = adam.m[li][pi];
          auto& v = adam.v[li][pi];
          for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = static_cast<float>(cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gr[i]);
            v[i] = static_cast<float>(cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gr[i] * gr[i]);
            const double mh = m[i] / c1, vh = v[i] / c2;
            w[i] -= static_cast<float>(lr * mh / (std::sqrt(vh) + cfg.epsilon));
          }
        }
      }
      apply_masks(g, nullptr);
      ++result.steps;
    }
    const double mean = loss_sum / static_cast<double>(examples.size());
    result.epoch_loss.push_back(mean);
  }
  return result;
}

std::vector<Gaze> predict_dataset(const ModelGraph& graph, const Dataset& data) {
  const ModelGraph compute = widen(graph);
  std::vector<Gaze> out;
  const bool recurrent = compute.recurrent_index() < compute.layers.size();
  for (std::size_t s = 0; s < data.sequences.size(); ++s) {
    const Sequence& seq = data.sequences[s];
    if (!recurrent) {
      for (const Tensor& f : seq.frames) out.push_back(model_forward(compute, std::span<const Tensor>(&f, 1)));
      continue;
    }
    // Each frame's embedding is computed once and reused across windows.
    std::vector<Tensor> emb;
    emb.reserve(seq.frames.size());
    for (const Tensor& f : seq.frames) emb.push_back(trunk_forward(compute, f));
    std::vector<Tensor> window(compute.window);
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
      for (std::size_t k = 0; k < compute.window; ++k) {
        const std::size_t back = compute.window - 1 - k;
        window[k] = emb[f >= back ? f - back : 0];
      }
      out.push_back(head_forward(compute, window));
    }
  }
  return out;
}

}  // namespace eyeedge::nn

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "eyeedge/common/gaze.hpp"
#include "eyeedge/nn/model.hpp"

namespace eyeedge::nn {

struct TrainConfig {
  double learning_rate = 0.001;
  double decay = 0.0001;  // lr_t = learning_rate / (1 + decay * t), t = optimizer step
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;

  void validate() const;
};

// One recording's worth of preprocessed frames and per-frame labels (cm).
struct Sequence {
  std::vector<Tensor> frames;
  std::vector<Gaze> labels;
};

struct Dataset {
  std::vector<Sequence> sequences;

  std::size_t frame_count() const;
  bool empty() const { return frame_count() == 0; }
};

// Each frame of each sequence is one example; the model sees the window of
// frames ending at it. Windows that start before the sequence begins repeat
// the first frame.
struct ExampleRef {
  std::size_t sequence = 0;
  std::size_t frame = 0;
};
std::vector<ExampleRef> enumerate_examples(const Dataset& data);
std::vector<const Tensor*> example_window(const Dataset& data, const ExampleRef& ex, std::size_t window);

struct TrainResult {
  ModelGraph graph;
  std::vector<double> epoch_loss;  // mean squared Euclidean distance, cm^2
  std::size_t steps = 0;
};

struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(const std::string& what, ModelGraph last_stable)
      : std::runtime_error(what), last_stable_graph(std::move(last_stable)) {}
  ModelGraph last_stable_graph;
};

// Adam on mean squared Euclidean distance. Masked weights (if the graph
// carries sparsity masks) get zero gradient and stay zero. Single threaded
// and deterministic in cfg.seed.
TrainResult train_adam(const ModelGraph& graph, const Dataset& data, const TrainConfig& cfg);

// Per-example predictions in enumerate_examples order.
std::vector<Gaze> predict_dataset(const ModelGraph& graph, const Dataset& data);

}  // namespace eyeedge::nn

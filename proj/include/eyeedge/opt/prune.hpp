#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eyeedge/nn/container.hpp"
#include "eyeedge/nn/model.hpp"
#include "eyeedge/nn/train.hpp"

namespace eyeedge::opt {

struct SparsitySchedule {
  double initial = 0.80;
  double final = 0.90;
  std::size_t total_steps = 2000;
  std::size_t interval = 500;

  void validate() const;
  // Steps at which pruning is applied: 0, interval, 2*interval, ... up to
  // total_steps (total_steps itself always included).
  std::vector<std::size_t> application_steps() const;
};

// Cubic ramp from initial to final, evaluated at the most recent
// application step at or before `step` and held in between.
double sparsity_at(std::size_t step, const SparsitySchedule& sched);

struct PruneResult {
  nn::Tensor weights;
  nn::Mask mask;  // 1 = survivor
};

// Zeroes exactly floor(target * n) entries with the smallest magnitude
// (ties broken by lower index). Entries already zero in `previous` stay
// pruned even if that exceeds the target count.
PruneResult prune_low_magnitude(const nn::Tensor& weights, double target, const nn::Mask& previous = {});

struct LayerSparsity {
  std::size_t layer = 0;
  std::string kind;
  std::size_t weights = 0;  // prunable entries (biases excluded)
  std::size_t zeros = 0;
  double sparsity() const { return weights == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(weights); }
};

struct OptimisationReport {
  std::string model;
  std::string method;  // "quantize" or "prune"
  std::size_t baseline_bytes = 0;
  std::size_t optimised_bytes = 0;
  std::vector<LayerSparsity> layers;
  std::optional<double> rmse_before;
  std::optional<double> rmse_after;

  double reduction_pct() const;
  std::string to_csv() const;
  std::string to_markdown() const;
};

struct FineTune {
  nn::TrainConfig config;  // epochs run after each application but the last
  const nn::Dataset* data = nullptr;
};

struct PruneOutcome {
  nn::ModelGraph graph;
  OptimisationReport report;
};

// Prunes every weight tensor of every parameterized layer to the schedule's
// sparsity at each application step, optionally fine-tuning with masked
// gradients in between. Sizes in the report use the sparse encoding for
// the pruned graph and the dense encoding for the baseline.
// A divergent fine-tune throws nn::TrainingDiverged whose
// last_stable_graph is the pruned graph before that fine-tune.
PruneOutcome prune_model(const nn::ModelGraph& graph, const SparsitySchedule& sched,
                         const std::optional<FineTune>& fine_tune = std::nullopt);

std::vector<LayerSparsity> measure_sparsity(const nn::ModelGraph& graph);

// Byte length of the model container under the given encoding. The dense
// figure excludes sparsity masks.
std::size_t serialized_size(const nn::ModelGraph& graph, nn::Encoding encoding);
// (1 - optimised / baseline) * 100.
double size_reduction(std::size_t baseline, std::size_t optimised);

}  // namespace eyeedge::opt

#include "eyeedge/opt/prune.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "eyeedge/common/rng.hpp"

namespace eyeedge::opt {

using nn::Mask;
using nn::ModelGraph;
using nn::Tensor;

void SparsitySchedule::validate() const {
  if (!(initial >= 0.0 && initial <= final && final <= 1.0)) {
    throw std::invalid_argument("sparsity schedule needs 0 <= initial <= final <= 1");
  }
  if (interval == 0) throw std::invalid_argument("sparsity schedule interval must be positive");
  if (total_steps % interval != 0) throw std::invalid_argument("schedule interval must divide total_steps");
}

std::vector<std::size_t> SparsitySchedule::application_steps() const {
  validate();
  std::vector<std::size_t> steps;
  for (std::size_t t = 0; t <= total_steps; t += interval) steps.push_back(t);
  return steps;
}

double sparsity_at(std::size_t step, const SparsitySchedule& sched) {
  sched.validate();
  if (sched.total_steps == 0) return sched.final;
  const std::size_t held = std::min(step / sched.interval * sched.interval, sched.total_steps);
  const double remaining = 1.0 - static_cast<double>(held) / static_cast<double>(sched.total_steps);
  const double r = remaining * remaining * remaining;
  return sched.initial * r + sched.final * (1.0 - r);
}

PruneResult prune_low_magnitude(const Tensor& weights, double target, const Mask& previous) {
  if (!(target >= 0.0 && target <= 1.0)) throw std::invalid_argument("target sparsity must be in [0, 1]");
  const std::size_t n = weights.size();
  if (!previous.empty() && previous.size() != n) throw std::invalid_argument("mask length differs from tensor");
  const auto values = weights.values();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto pruned_before = [&](std::size_t i) { return !previous.empty() && previous[i] == 0; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool pa = pruned_before(a), pb = pruned_before(b);
    if (pa != pb) return pa;
    return std::fabs(values[a]) < std::fabs(values[b]);
  });

  std::size_t already = 0;
  for (std::size_t i = 0; i < n; ++i) already += pruned_before(i) ? 1 : 0;
  // Nudged so that products like 0.9 * 10 = 8.999... still count as 9.
  const auto k = std::max(already, static_cast<std::size_t>(std::floor(target * static_cast<double>(n) + 1e-9)));

  PruneResult out{weights, Mask(n, 1)};
  auto w = out.weights.values();
  for (std::size_t j = 0; j < std::min(k, n); ++j) {
    w[order[j]] = 0.0f;
    out.mask[order[j]] = 0;
  }
  return out;
}

namespace {

void prune_graph(ModelGraph& g, double target) {
  for (nn::Layer& layer : g.layers) {
    if (!layer.spec.parameterized()) continue;
    if (layer.masks.empty()) layer.masks.assign(layer.params.size(), Mask{});
    const std::size_t bias = nn::bias_index(layer);
    for (std::size_t pi = 0; pi < layer.params.size(); ++pi) {
      if (pi == bias) continue;
      PruneResult r = prune_low_magnitude(layer.params[pi], target, layer.masks[pi]);
      layer.params[pi] = std::move(r.weights);
      layer.masks[pi] = std::move(r.mask);
    }
  }
}

}  // namespace

std::vector<LayerSparsity> measure_sparsity(const ModelGraph& graph) {
  std::vector<LayerSparsity> out;
  for (std::size_t li = 0; li < graph.layers.size(); ++li) {
    const nn::Layer& layer = graph.layers[li];
    if (!layer.spec.parameterized()) continue;
    LayerSparsity s{li, nn::to_string(layer.spec.kind), 0, 0};
    const std::size_t bias = nn::bias_index(layer);
    for (std::size_t pi = 0; pi < layer.params.size(); ++pi) {
      if (pi == bias) continue;
      const Tensor& t = layer.params[pi];
      s.weights += t.size();
      for (std::size_t i = 0; i < t.size(); ++i) s.zeros += t.at(i) == 0.0f ? 1 : 0;
    }
    out.push_back(s);
  }
  return out;
}

PruneOutcome prune_model(const ModelGraph& graph, const SparsitySchedule& sched,
                         const std::optional<FineTune>& fine_tune) {
  if (graph.dtype != nn::DType::f32) throw std::invalid_argument("prune_model expects a single-precision graph");
  if (fine_tune && (fine_tune->data == nullptr || fine_tune->data->empty())) {
    throw std::invalid_argument("fine-tuning needs a non-empty dataset");
  }
  const std::vector<std::size_t> steps = sched.application_steps();
  ModelGraph g = graph;
  if (sched.final > 0.0) {
    for (std::size_t i = 0; i < steps.size(); ++i) {
      prune_graph(g, sparsity_at(steps[i], sched));
      if (fine_tune && i + 1 < steps.size()) {
        nn::TrainConfig cfg = fine_tune->config;
        cfg.seed = derive_seed(cfg.seed, i);
        try {
          g = nn::train_adam(g, *fine_tune->data, cfg).graph;
        } catch (const nn::TrainingDiverged& e) {
          throw nn::TrainingDiverged(std::string("fine-tune after pruning step ") + std::to_string(steps[i]) +
                                         ": " + e.what(),
                                     g);
        }
      }
    }
  }
  PruneOutcome out{g, {}};
  out.report.model = graph.name;
  out.report.method = "prune";
  out.report.baseline_bytes = serialized_size(graph, nn::Encoding::dense);
  out.report.optimised_bytes = serialized_size(g, nn::Encoding::sparse);
  out.report.layers = measure_sparsity(g);
  return out;
}

std::size_t serialized_size(const ModelGraph& graph, nn::Encoding encoding) {
  if (encoding == nn::Encoding::sparse || !graph.has_masks()) return nn::encode_container(graph, encoding).size();
  // Dense deployments omit masks.
  ModelGraph stripped = graph;
  for (nn::Layer& l : stripped.layers) l.masks.clear();
  return nn::encode_container(stripped, encoding).size();
}

double size_reduction(std::size_t baseline, std::size_t optimised) {
  if (baseline == 0) throw std::invalid_argument("baseline size must be positive");
  return (1.0 - static_cast<double>(optimised) / static_cast<double>(baseline)) * 100.0;
}

double OptimisationReport::reduction_pct() const { return size_reduction(baseline_bytes, optimised_bytes); }

namespace {

std::string optional_number(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s << std::setprecision(6) << *v;
  return s.str();
}

}  // namespace

std::string OptimisationReport::to_csv() const {
  std::ostringstream s;
  s << "model,method,baseline_bytes,optimised_bytes,reduction_pct,rmse_before,rmse_after\n";
  s << model << ',' << method << ',' << baseline_bytes << ',' << optimised_bytes << ',' << std::fixed
    << std::setprecision(2) << reduction_pct() << ',' << optional_number(rmse_before) << ','
    << optional_number(rmse_after) << '\n';
  if (!layers.empty()) {
    s << "\nlayer,kind,weights,zeros,sparsity\n";
    for (const LayerSparsity& l : layers) {
      s << l.layer << ',' << l.kind << ',' << l.weights << ',' << l.zeros << ',' << std::setprecision(4)
        << l.sparsity() << '\n';
    }
  }
  return s.str();
}

std::string OptimisationReport::to_markdown() const {
  std::ostringstream s;
  s << "# " << model << " (" << method << ")\n\n";
  s << "| baseline bytes | optimised bytes | reduction % | RMSE before | RMSE after |\n";
  s << "|---:|---:|---:|---:|---:|\n";
  s << "| " << baseline_bytes << " | " << optimised_bytes << " | " << std::fixed << std::setprecision(2)
    << reduction_pct() << " | " << optional_number(rmse_before) << " | " << optional_number(rmse_after) << " |\n";
  if (!layers.empty()) {
    s << "\n| layer | kind | weights | zeros | sparsity |\n|---:|---|---:|---:|---:|\n";
    for (const LayerSparsity& l : layers) {
      s << "| " << l.layer << " | " << l.kind << " | " << l.weights << " | " << l.zeros << " | "
        << std::setprecision(4) << l.sparsity() << " |\n";
    }
  }
  return s.str();
}

}  // namespace eyeedge::opt

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "eyeedge/common/rng.hpp"
#include "eyeedge/nn/config.hpp"
#include "eyeedge/nn/half.hpp"
#include "eyeedge/opt/prune.hpp"
#include "eyeedge/opt/quantize.hpp"

using namespace eyeedge;
using namespace eyeedge::nn;
using namespace eyeedge::opt;

namespace {

ModelGraph dense_graph(std::size_t in, std::size_t units, std::uint64_t seed) {
  LayerSpec d;
  d.kind = LayerKind::dense;
  d.units = units;
  return build_graph(ModelConfig{"d", {in}, 1, {d}}, seed);
}

std::vector<Tensor> frames_for(const ModelGraph& g, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> frames;
  for (std::size_t i = 0; i < g.window; ++i) {
    Tensor t(g.input_shape);
    for (float& v : t.values()) v = static_cast<float>(rng.uniform());
    frames.push_back(t);
  }
  return frames;
}

double deviation(const Gaze& a, const Gaze& b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

}  // namespace

TEST_CASE("quantize_half examples") {
  ModelGraph g = dense_graph(3, 2, 1);
  g.layers[0].params[0][0] = 1.0f;
  g.layers[0].params[0][1] = 0.1f;
  const ModelGraph h = quantize_half(g);
  CHECK(h.dtype == DType::f16);
  CHECK(h.layers[0].params[0].at(0) == 1.0f);
  CHECK(h.layers[0].params[0].at(1) == 0.0999755859375f);
  CHECK(h.layers[0].spec == g.layers[0].spec);

  const ModelGraph big = dense_graph(499, 2, 1);  // 998 weights + 2 biases
  CHECK(param_count(big) == 1000);
  CHECK(payload_bytes(big) == 4000);
  CHECK(payload_bytes(quantize_half(big)) == 2000);
  CHECK_THROWS_AS(quantize_half(h), std::invalid_argument);
}

TEST_CASE("quantize_half rejects values outside half range") {
  ModelGraph g = build_graph(model_config("tiny", "cnn"), 3);
  g.layers[1].params[0][4] = 70000.0f;
  try {
    quantize_half(g);
    FAIL("expected a range error");
  } catch (const QuantizationRangeError& e) {
    CHECK(std::string(e.what()).find("layer 1 (conv2d)") != std::string::npos);
  }
  g.layers[1].params[0][4] = 65504.0f;
  CHECK_NOTHROW(quantize_half(g));
}

TEST_CASE("quantize keeps masks and halves payload exactly") {
  for (const char* name : {"cnn", "cnn_gru", "cnn_lstm"}) {
    const ModelGraph g = build_graph(model_config("tiny", name), 5);
    const ModelGraph pruned = prune_model(g, SparsitySchedule{}).graph;
    const ModelGraph h = quantize_half(pruned);
    CHECK(payload_bytes(h) * 2 == payload_bytes(pruned));
    for (std::size_t li = 0; li < h.layers.size(); ++li) CHECK(h.layers[li].masks == pruned.layers[li].masks);
  }
}

TEST_CASE("quantise round trip error is bounded by 2^-11 max|w|") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ModelGraph g = build_graph(model_config("tiny", "cnn_lstm"), seed);
    const ModelGraph back = widen(quantize_half(g));
    for (std::size_t li = 0; li < g.layers.size(); ++li) {
      for (std::size_t pi = 0; pi < g.layers[li].params.size(); ++pi) {
        const auto a = g.layers[li].params[pi].values();
        const auto b = back.layers[li].params[pi].values();
        float max_w = 0.0f;
        for (float v : a) max_w = std::max(max_w, std::fabs(v));
        for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(std::fabs(a[i] - b[i]) <= std::ldexp(max_w, -11));
      }
    }
  }
}

TEST_CASE("quantised output deviation shrinks with weight magnitude") {
  for (const char* name : {"cnn", "cnn_gru"}) {
    const ModelGraph base = build_graph(model_config("tiny", name), 8);
    const auto frames = frames_for(base, 3);
    double previous = INFINITY;
    for (float scale : {1.0f, 0.5f, 0.25f, 0.125f}) {
      ModelGraph g = base;
      for (Layer& l : g.layers)
        for (Tensor& t : l.params)
          for (float& v : t.values()) v *= scale;
      const double dev = deviation(model_forward(g, frames), model_forward(quantize_half(g), frames));
      MESSAGE(std::string(name) << " scale " << scale << " deviation " << dev);
      CHECK(dev < previous);
      previous = dev;
    }
  }
}

TEST_CASE("sparsity schedule") {
  const SparsitySchedule s;
  CHECK(sparsity_at(0, s) == doctest::Approx(0.80).epsilon(1e-12));
  CHECK(sparsity_at(2000, s) == doctest::Approx(0.90).epsilon(1e-12));
  CHECK(sparsity_at(1000, s) == doctest::Approx(0.8875).epsilon(1e-12));
  CHECK(sparsity_at(500, s) == doctest::Approx(0.90 - 0.10 * 0.421875).epsilon(1e-12));
  CHECK(sparsity_at(1499, s) == sparsity_at(1000, s));
  CHECK(sparsity_at(5000, s) == sparsity_at(2000, s));
  double prev = 0.0;
  for (std::size_t t = 0; t <= 3000; ++t) {
    const double v = sparsity_at(t, s);
    REQUIRE(v >= prev);
    if (t % s.interval != 0) REQUIRE(v == sparsity_at(t - 1, s));
    prev = v;
  }
  CHECK(s.application_steps() == std::vector<std::size_t>{0, 500, 1000, 1500, 2000});
  CHECK_THROWS(sparsity_at(0, SparsitySchedule{0.9, 0.8, 2000, 500}));
  CHECK_THROWS(sparsity_at(0, SparsitySchedule{0.8, 0.9, 2000, 300}));
}

TEST_CASE("prune_low_magnitude examples") {
  const Tensor w({4}, {1.0f, -3.0f, 2.0f, 0.5f});
  const PruneResult half = prune_low_magnitude(w, 0.5);
  CHECK(half.weights == Tensor({4}, {0.0f, -3.0f, 2.0f, 0.0f}));
  CHECK(half.mask == Mask{0, 1, 1, 0});
  const PruneResult none = prune_low_magnitude(w, 0.0);
  CHECK(none.weights == w);
  CHECK(none.mask == Mask(4, 1));
  const PruneResult all = prune_low_magnitude(w, 1.0);
  for (float v : all.weights.values()) CHECK(v == 0.0f);
  CHECK(prune_low_magnitude(Tensor({4}, {1, 1, 1, 1}), 0.5).mask == Mask{0, 0, 1, 1});
  CHECK_THROWS(prune_low_magnitude(w, 1.5));
}

TEST_CASE("prune_low_magnitude properties") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    Tensor w({n});
    for (float& v : w.values()) v = static_cast<float>(rng.uniform(-1, 1));
    const double t0 = rng.uniform(0, 0.9);
    const double t1 = t0 + rng.uniform(0, 1 - t0);
    const PruneResult a = prune_low_magnitude(w, t0);
    const PruneResult b = prune_low_magnitude(a.weights, t1, a.mask);
    const auto zeros = static_cast<std::size_t>(std::count(b.mask.begin(), b.mask.end(), 0));
    REQUIRE(zeros == static_cast<std::size_t>(std::floor(t1 * static_cast<double>(n) + 1e-9)));
    float max_pruned = 0.0f, min_kept = INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      if (!a.mask[i]) REQUIRE(!b.mask[i]);
      if (b.mask[i]) {
        REQUIRE(b.weights[i] == w[i]);
        min_kept = std::min(min_kept, std::fabs(w[i]));
      } else {
        REQUIRE(b.weights[i] == 0.0f);
        max_pruned = std::max(max_pruned, std::fabs(w[i]));
      }
    }
    REQUIRE(max_pruned <= min_kept);
  }
  // A lower target never revives earlier pruning.
  const PruneResult a = prune_low_magnitude(Tensor({4}, {1, 2, 3, 4}), 0.75);
  const PruneResult b = prune_low_magnitude(a.weights, 0.25, a.mask);
  CHECK(b.mask == a.mask);
}

TEST_CASE("prune_model with an empty schedule leaves the graph unchanged") {
  const ModelGraph g = build_graph(model_config("tiny", "cnn_gru"), 2);
  const PruneOutcome out = prune_model(g, SparsitySchedule{0.0, 0.0, 2000, 500});
  CHECK(out.graph == g);
}

TEST_CASE("pruned forward equals baseline forward with the mask applied") {
  for (const char* name : {"cnn", "cnn_gru", "cnn_lstm"}) {
    const ModelGraph g = build_graph(model_config("tiny", name), 12);
    const ModelGraph pruned = prune_model(g, SparsitySchedule{}).graph;
    ModelGraph masked = g;
    for (std::size_t li = 0; li < g.layers.size(); ++li) {
      const Layer& pl = pruned.layers[li];
      for (std::size_t pi = 0; pi < pl.masks.size(); ++pi) {
        if (pl.masks[pi].empty()) continue;
        for (std::size_t i = 0; i < pl.masks[pi].size(); ++i) {
          if (!pl.masks[pi][i]) masked.layers[li].params[pi][i] = 0.0f;
        }
      }
    }
    const auto frames = frames_for(g, 4);
    const Gaze a = model_forward(pruned, frames);
    const Gaze b = model_forward(masked, frames);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
  }
}

TEST_CASE("default schedule reaches final sparsity per layer") {
  for (const char* name : {"cnn", "cnn_gru", "cnn_lstm"}) {
    const ModelGraph g = build_graph(model_config("tiny", name), 6);
    const PruneOutcome out = prune_model(g, SparsitySchedule{});
    CHECK(!out.report.layers.empty());
    for (const LayerSparsity& l : out.report.layers) {
      INFO(std::string(name) << " layer " << l.layer);
      CHECK(std::abs(l.sparsity() - 0.90) <= 2.0 / static_cast<double>(l.weights));
    }
    // Biases are never pruned.
    for (const Layer& l : out.graph.layers) {
      if (!l.params.empty()) CHECK(l.masks[bias_index(l)].empty());
    }
  }
}

TEST_CASE("fine-tuning keeps pruned weights at zero") {
  Rng rng(2);
  Dataset data;
  Sequence seq;
  for (int i = 0; i < 12; ++i) {
    Tensor f({128, 128, 1});
    for (float& v : f.values()) v = static_cast<float>(rng.uniform());
    seq.frames.push_back(f);
    seq.labels.push_back({rng.uniform(0, 6), rng.uniform(0, 12)});
  }
  data.sequences.push_back(seq);
  const ModelGraph g = build_graph(model_config("tiny", "cnn"), 6);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.01;
  const PruneOutcome out = prune_model(g, SparsitySchedule{}, FineTune{cfg, &data});
  for (const Layer& l : out.graph.layers) {
    for (std::size_t pi = 0; pi < l.masks.size(); ++pi) {
      for (std::size_t i = 0; i < l.masks[pi].size(); ++i) {
        if (!l.masks[pi][i]) REQUIRE(l.params[pi][i] == 0.0f);
      }
    }
  }
  const PruneOutcome plain = prune_model(g, SparsitySchedule{});
  CHECK_FALSE(out.graph == plain.graph);
  for (const LayerSparsity& l : out.report.layers) CHECK(l.sparsity() >= 0.90 - 2.0 / l.weights);

  CHECK_THROWS_AS(prune_model(g, SparsitySchedule{}, FineTune{cfg, nullptr}), std::invalid_argument);
  ModelGraph broken = g;
  broken.layers.back().params.back()[0] = NAN;
  try {
    prune_model(broken, SparsitySchedule{}, FineTune{cfg, &data});
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK(e.last_stable_graph.has_masks());
  }
}

TEST_CASE("serialized sizes") {
  CHECK(size_reduction(4000, 2000) == 50.0);
  CHECK_THROWS(size_reduction(0, 1));

  const ModelGraph g = build_graph(model_config("tiny", "cnn_lstm"), 9);
  const ModelGraph pruned = prune_model(g, SparsitySchedule{}).graph;
  CHECK(serialized_size(pruned, Encoding::dense) == serialized_size(g, Encoding::dense));

  const std::size_t in = 2000;
  const ModelGraph one = dense_graph(in, 2, 4);
  const ModelGraph sparse = prune_model(one, SparsitySchedule{}).graph;
  const std::size_t n = in * 2;
  const std::size_t dense_bytes = serialized_size(one, Encoding::dense);
  const std::size_t sparse_bytes = serialized_size(sparse, Encoding::sparse);
  const std::size_t header = dense_bytes - (n + 2) * 4;
  CHECK(sparse_bytes - header < 0.15 * (n * 4) + (n + 7) / 8 + 4 + 2 * 4);

  OptimisationReport r = prune_model(g, SparsitySchedule{}).report;
  CHECK(r.baseline_bytes == serialized_size(g, Encoding::dense));
  CHECK(r.reduction_pct() > 0.0);
  CHECK(r.to_csv().find("model,method,baseline_bytes") == 0);
  CHECK(r.to_markdown().find("| layer | kind |") != std::string::npos);
}

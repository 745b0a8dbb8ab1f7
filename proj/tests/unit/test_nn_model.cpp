#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "doctest.h"
#include "eyeedge/common/rng.hpp"
#include "eyeedge/nn/config.hpp"
#include "eyeedge/nn/container.hpp"
#include "eyeedge/nn/half.hpp"
#include "eyeedge/nn/model.hpp"
#include "eyeedge/nn/train.hpp"

using namespace eyeedge;
using namespace eyeedge::nn;

namespace {

LayerSpec dense(std::size_t units, Activation act = Activation::linear) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.units = units;
  s.activation = act;
  return s;
}

LayerSpec conv(std::size_t filters, std::size_t k, Padding pad) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.kernel_h = s.kernel_w = k;
  s.units = filters;
  s.padding = pad;
  return s;
}

LayerSpec simple(LayerKind kind) {
  LayerSpec s;
  s.kind = kind;
  return s;
}

LayerSpec relu() {
  LayerSpec s = simple(LayerKind::activation);
  s.activation = Activation::relu;
  return s;
}

LayerSpec recurrent(LayerKind kind, std::size_t units) {
  LayerSpec s = simple(kind);
  s.units = units;
  return s;
}

Tensor random_frame(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (float& v : t.values()) v = static_cast<float>(rng.uniform());
  return t;
}

// Round-to-nearest-even onto the binary16 grid using only libm.
double half_oracle(float f) {
  const double a = std::fabs(static_cast<double>(f));
  if (std::isnan(f)) return f;
  if (a >= 65520.0) return std::copysign(INFINITY, f);
  double step;
  if (a < std::ldexp(1.0, -14)) {
    step = std::ldexp(1.0, -24);
  } else {
    int e = 0;
    std::frexp(a, &e);  // a = m * 2^e, m in [0.5, 1)
    step = std::ldexp(1.0, e - 1 - 10);
  }
  return std::nearbyint(static_cast<double>(f) / step) * step;
}

ModelGraph to_half(const ModelGraph& g) {
  ModelGraph h = g;
  h.dtype = DType::f16;
  for (Layer& l : h.layers) {
    for (Tensor& t : l.params) {
      std::vector<std::uint16_t> bits;
      for (float v : t.values()) bits.push_back(float_to_half(v));
      t = Tensor::from_half_bits(t.shape(), std::move(bits));
    }
  }
  return h;
}

}  // namespace

TEST_CASE("half conversion") {
  CHECK(round_to_half(0.1f) == 0.0999755859375f);
  CHECK(round_to_half(65504.0f) == 65504.0f);
  CHECK(std::isinf(round_to_half(65520.0f)));
  CHECK(round_to_half(65519.0f) == 65504.0f);
  CHECK(float_to_half(1.0f) == 0x3C00);
  CHECK(float_to_half(-2.0f) == 0xC000);
  CHECK(float_to_half(0x1.0p-24f) == 0x0001);
  CHECK(float_to_half(0x1.0p-26f) == 0x0000);
  CHECK(std::isnan(round_to_half(NAN)));

  for (std::uint32_t bits = 0; bits < 0x10000; ++bits) {
    const auto h = static_cast<std::uint16_t>(bits);
    const float f = half_to_float(h);
    if (std::isnan(f)) continue;
    REQUIRE(float_to_half(f) == h);
  }

  Rng rng(42);
  for (int i = 0; i < 200000; ++i) {
    // Spread over magnitudes from subnormal to overflow.
    const double mag = std::ldexp(rng.uniform(1.0, 2.0), static_cast<int>(rng.below(44)) - 28);
    const float f = static_cast<float>(rng.below(2) ? mag : -mag);
    REQUIRE(static_cast<double>(round_to_half(f)) == half_oracle(f));
  }
}

TEST_CASE("param_count direct counts") {
  ModelConfig d{"d", {3}, 1, {dense(2)}};
  CHECK(param_count(build_graph(d, 1)) == 8);

  ModelConfig c{"c", {5, 5, 1}, 1, {conv(4, 3, Padding::valid), simple(LayerKind::flatten), dense(2)}};
  const ModelGraph g = build_graph(c, 1);
  CHECK(g.layers[0].params[0].size() + g.layers[0].params[1].size() == 40);
  CHECK(param_count(g) == 40 + 36 * 2 + 2);
}

TEST_CASE("gru head has fewer parameters than lstm head") {
  for (const char* size : {"tiny", "reference"}) {
    const auto gru = param_count(build_graph(model_config(size, "cnn_gru"), 0));
    const auto lstm = param_count(build_graph(model_config(size, "cnn_lstm"), 0));
    CHECK(gru < lstm);
  }
}

TEST_CASE("reference and tiny configs") {
  // Summation over the layer specs in configs/models.json.
  const std::size_t trunk = (3 * 3 * 1 * 32 + 32) + (9 * 32 + 32) + (32 * 64 + 64) + (9 * 64 + 64) +
                            (64 * 128 + 128) + (9 * 128 + 128) + (128 * 256 + 256) + (9 * 256 + 256) +
                            (256 * 256 + 256) + (4096 * 768 + 768);
  const std::size_t cnn = trunk + 768 * 2 + 2;
  const std::size_t gru = trunk + 3 * 64 * (768 + 64 + 1) + 64 * 2 + 2;
  const std::size_t lstm = trunk + 4 * 64 * (768 + 64 + 1) + 64 * 2 + 2;
  CHECK(param_count(build_graph(model_config("reference", "cnn"), 1)) == cnn);
  CHECK(param_count(build_graph(model_config("reference", "cnn"), 2)) == cnn);
  CHECK(param_count(build_graph(model_config("reference", "cnn_gru"), 1)) == gru);
  CHECK(param_count(build_graph(model_config("reference", "cnn_lstm"), 1)) == lstm);
  CHECK(cnn == 3262402);

  // Within 20% of 3.210M / 3.343M / 3.344M.
  CHECK(std::abs(static_cast<double>(cnn) / 3.210e6 - 1.0) <= 0.2);
  CHECK(std::abs(static_cast<double>(gru) / 3.343e6 - 1.0) <= 0.2);
  CHECK(std::abs(static_cast<double>(lstm) / 3.344e6 - 1.0) <= 0.2);

  for (const char* name : {"cnn", "cnn_gru", "cnn_lstm"}) {
    const ModelGraph g = build_graph(model_config("tiny", name), 1);
    CHECK(param_count(g) < 50000);
    CHECK(g.layers.back().output_shape == Shape{2});
    CHECK(g.input_shape == Shape{128, 128, 1});
  }
  CHECK(model_config("reference", "cnn_gru").window == 8);
  CHECK_THROWS(model_config("reference", "alexnet"));
  CHECK_THROWS(model_config("huge", "cnn"));
}

TEST_CASE("build_graph validation") {
  CHECK_THROWS_AS(build_graph(ModelConfig{"x", {3}, 1, {dense(3)}}, 1), ShapeError);
  CHECK_THROWS_AS(build_graph(ModelConfig{"x", {4, 4, 1}, 1, {dense(2)}}, 1), ShapeError);
  CHECK_THROWS(build_graph(ModelConfig{"x", {3}, 2, {dense(2)}}, 1));
  CHECK_THROWS(build_graph(
      ModelConfig{"x", {3}, 2, {recurrent(LayerKind::gru, 2), recurrent(LayerKind::lstm, 2), dense(2)}}, 1));
}

TEST_CASE("model_forward with zero weights returns the final bias") {
  ModelGraph g = build_graph(model_config("tiny", "cnn_lstm"), 3);
  for (Layer& l : g.layers)
    for (Tensor& t : l.params) t.fill(0.0f);
  g.layers.back().params.back() = Tensor({2}, {1.5f, -0.25f});
  Rng rng(1);
  std::vector<Tensor> frames;
  for (std::size_t i = 0; i < g.window; ++i) frames.push_back(random_frame(g.input_shape, rng));
  const Gaze out = model_forward(g, frames);
  CHECK(out.x == 1.5);
  CHECK(out.y == -0.25);
}

TEST_CASE("model_forward is deterministic and validates input") {
  for (const char* name : {"cnn", "cnn_gru", "cnn_lstm"}) {
    const ModelGraph g = build_graph(model_config("tiny", name), 9);
    Rng rng(2);
    std::vector<Tensor> frames;
    for (std::size_t i = 0; i < g.window; ++i) frames.push_back(random_frame(g.input_shape, rng));
    const Gaze a = model_forward(g, frames);
    const Gaze b = model_forward(g, frames);
    CHECK(std::memcmp(&a, &b, sizeof(Gaze)) == 0);
    CHECK(std::isfinite(a.x));

    std::vector<Tensor> short_window(frames.begin(), frames.end() - 1);
    if (g.window > 1) CHECK_THROWS_AS(model_forward(g, short_window), ShapeError);
    std::vector<Tensor> bad(g.window, Tensor({64, 64, 1}));
    CHECK_THROWS_AS(model_forward(g, bad), ShapeError);
  }
}

TEST_CASE("model_forward rejects non-finite parameters") {
  ModelGraph g = build_graph(model_config("tiny", "cnn"), 3);
  g.layers.back().params.back()[0] = NAN;
  Rng rng(1);
  std::vector<Tensor> frames{random_frame(g.input_shape, rng)};
  CHECK_THROWS_AS(model_forward(g, frames), NonFiniteError);
}

TEST_CASE("tiny conv+dense graph equals hand-rolled composition") {
  ModelConfig cfg{"t", {4, 4, 1}, 1, {conv(2, 3, Padding::same), relu(), simple(LayerKind::flatten), dense(2)}};
  const ModelGraph g = build_graph(cfg, 17);
  Rng rng(5);
  const Tensor frame = random_frame({4, 4, 1}, rng);
  const Tensor& k = g.layers[0].params[0];
  const Tensor& kb = g.layers[0].params[1];
  const Tensor& w = g.layers[3].params[0];
  const Tensor& b = g.layers[3].params[1];

  std::vector<double> hidden(4 * 4 * 2);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int f = 0; f < 2; ++f) {
        double s = kb[f];
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= 4 || xx < 0 || xx >= 4) continue;
            s += frame[yy * 4 + xx] * k[((dy + 1) * 3 + (dx + 1)) * 2 + f];
          }
        hidden[(y * 4 + x) * 2 + f] = std::max(0.0, s);
      }
  double out[2];
  for (int o = 0; o < 2; ++o) {
    out[o] = b[o];
    for (int i = 0; i < 32; ++i) out[o] += w[o * 32 + i] * hidden[i];
  }
  const Gaze got = model_forward(g, std::span<const Tensor>(&frame, 1));
  CHECK(std::abs(got.x - out[0]) <= 1e-5);
  CHECK(std::abs(got.y - out[1]) <= 1e-5);
}

TEST_CASE("half graphs compute on widened weights") {
  const ModelGraph g = build_graph(model_config("tiny", "cnn_gru"), 4);
  const ModelGraph h = to_half(g);
  CHECK(payload_bytes(h) * 2 == payload_bytes(g));
  const ModelGraph w = widen(h);
  CHECK(w.dtype == DType::f32);
  for (std::size_t li = 0; li < g.layers.size(); ++li)
    for (std::size_t pi = 0; pi < g.layers[li].params.size(); ++pi)
      for (std::size_t i = 0; i < g.layers[li].params[pi].size(); ++i)
        REQUIRE(w.layers[li].params[pi][i] == round_to_half(g.layers[li].params[pi][i]));
  Rng rng(3);
  std::vector<Tensor> frames;
  for (std::size_t i = 0; i < g.window; ++i) frames.push_back(random_frame(g.input_shape, rng));
  const Gaze a = model_forward(h, frames);
  const Gaze b = model_forward(w, frames);
  CHECK(a == b);
}

TEST_CASE("train_adam fits y = 2x") {
  // Least squares on exact data has slope 2 and intercept 0.
  Dataset data;
  Sequence seq;
  for (int i = 0; i < 64; ++i) {
    const float x = -1.0f + 2.0f * static_cast<float>(i) / 63.0f;
    seq.frames.push_back(Tensor({1}, {x}));
    seq.labels.push_back({2.0 * x, 2.0 * x});
  }
  data.sequences.push_back(seq);
  ModelGraph g = build_graph(ModelConfig{"lin", {1}, 1, {dense(2)}}, 7);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.decay = 0.0001;
  cfg.batch_size = 8;
  cfg.epochs = 150;
  cfg.seed = 3;
  const TrainResult r = train_adam(g, data, cfg);
  CHECK(r.graph.layers[0].params[0][0] == doctest::Approx(2.0).epsilon(0.005));
  CHECK(r.graph.layers[0].params[0][1] == doctest::Approx(2.0).epsilon(0.005));
  CHECK(r.epoch_loss.size() == 150);
  CHECK(r.epoch_loss.back() < r.epoch_loss.front());
  CHECK(r.steps == 150 * 8);
}

TEST_CASE("train_adam edge cases") {
  Rng rng(1);
  Dataset data;
  Sequence seq;
  for (int i = 0; i < 10; ++i) {
    seq.frames.push_back(random_frame({128, 128, 1}, rng));
    seq.labels.push_back({rng.uniform(0, 6), rng.uniform(0, 12)});
  }
  data.sequences.push_back(seq);

  const ModelGraph g = build_graph(model_config("tiny", "cnn_gru"), 11);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK(train_adam(g, data, cfg).graph == g);

  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 5;
  const TrainResult a = train_adam(g, data, cfg);
  const TrainResult b = train_adam(g, data, cfg);
  CHECK(a.graph == b.graph);
  CHECK(a.epoch_loss == b.epoch_loss);
  CHECK_FALSE(a.graph == g);

  CHECK_THROWS_AS(train_adam(g, Dataset{}, cfg), std::invalid_argument);
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train_adam(g, data, cfg), std::invalid_argument);

  cfg.learning_rate = 0.001;
  ModelGraph broken = g;
  broken.layers.back().params.back()[0] = INFINITY;
  CHECK_THROWS_AS(train_adam(broken, data, cfg), TrainingDiverged);
}

TEST_CASE("windows repeat the first frame before the sequence starts") {
  Dataset data;
  Sequence seq;
  for (int i = 0; i < 3; ++i) {
    seq.frames.push_back(Tensor({1}, {static_cast<float>(i)}));
    seq.labels.push_back({});
  }
  data.sequences.push_back(seq);
  const auto w = example_window(data, {0, 1}, 4);
  REQUIRE(w.size() == 4);
  CHECK((*w[0])[0] == 0.0f);
  CHECK((*w[1])[0] == 0.0f);
  CHECK((*w[2])[0] == 0.0f);
  CHECK((*w[3])[0] == 1.0f);
  CHECK(enumerate_examples(data).size() == 3);
}

TEST_CASE("masked weights stay zero through training") {
  Rng rng(1);
  Dataset data;
  Sequence seq;
  for (int i = 0; i < 8; ++i) {
    seq.frames.push_back(random_frame({3}, rng));
    seq.labels.push_back({rng.uniform(), rng.uniform()});
  }
  data.sequences.push_back(seq);
  ModelGraph g = build_graph(ModelConfig{"m", {3}, 1, {dense(4, Activation::relu), dense(2)}}, 2);
  Layer& l = g.layers[0];
  l.masks = {Mask(12, 1), Mask{}};
  for (std::size_t i = 0; i < 12; i += 2) {
    l.masks[0][i] = 0;
    l.params[0][i] = 0.0f;
  }
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.01;
  const TrainResult r = train_adam(g, data, cfg);
  for (std::size_t i = 0; i < 12; ++i) {
    if (i % 2 == 0) CHECK(r.graph.layers[0].params[0][i] == 0.0f);
    else CHECK(r.graph.layers[0].params[0][i] != g.layers[0].params[0][i]);
  }
}

TEST_CASE("container round trip") {
  for (const char* name : {"cnn", "cnn_gru", "cnn_lstm"}) {
    const ModelGraph g = build_graph(model_config("tiny", name), 21);
    const auto bytes = encode_container(g);
    const ModelGraph back = decode_container(bytes);
    CHECK(back == g);
    CHECK(encode_container(back) == bytes);

    const ModelGraph h = to_half(g);
    const auto hb = encode_container(h);
    CHECK(decode_container(hb) == h);
    CHECK(hb.size() < bytes.size());
  }
}

TEST_CASE("container masks and sparse storage") {
  ModelGraph g = build_graph(model_config("tiny", "cnn"), 2);
  Layer& big = g.layers[10];
  REQUIRE(big.spec.kind == LayerKind::dense);
  const std::size_t n = big.params[0].size();
  big.masks = {Mask(n, 0), Mask{}};
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 10 == 0) big.masks[0][i] = 1;
    else big.params[0][i] = 0.0f;
  }
  const auto dense_bytes = encode_container(g, Encoding::dense);
  const auto sparse_bytes = encode_container(g, Encoding::sparse);
  CHECK(decode_container(dense_bytes) == g);
  CHECK(decode_container(sparse_bytes) == g);
  CHECK(encode_container(decode_container(sparse_bytes), Encoding::sparse) == sparse_bytes);
  CHECK(sparse_bytes.size() < dense_bytes.size());

  ModelGraph dirty = g;
  dirty.layers[10].params[0][1] = 0.5f;
  CHECK_THROWS_AS(encode_container(dirty, Encoding::sparse), ContainerError);
}

TEST_CASE("container detects corruption") {
  const ModelGraph g = build_graph(model_config("tiny", "cnn"), 2);
  auto bytes = encode_container(g);
  CHECK(verify_container(bytes));
  for (std::size_t pos : {std::size_t{6}, bytes.size() / 2, bytes.size() - 5}) {
    auto bad = bytes;
    bad[pos] ^= 0x10;
    CHECK_FALSE(verify_container(bad));
    CHECK_THROWS_AS(decode_container(bad), IntegrityError);
  }
  auto wrong_magic = bytes;
  wrong_magic[0] = 'X';
  CHECK_THROWS_AS(decode_container(wrong_magic), ContainerError);
  CHECK_THROWS_AS(decode_container(std::span(bytes).first(8)), ContainerError);
  CHECK(std::string(reinterpret_cast<const char*>(bytes.data()), 4) == "GZLM");
}

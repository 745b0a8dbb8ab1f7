#include "eyeedge/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "eyeedge/common/rng.hpp"

namespace eyeedge::nn {

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += static_cast<double>(av[i]) * bv[i];
  return s;
}

double dot(const std::vector<float>& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

using LossFn = std::function<double(const std::vector<Tensor>&)>;
using GradFn = std::function<std::vector<Tensor>(const std::vector<Tensor>&)>;

GradCheckResult compare(std::vector<Tensor> vars, const LossFn& loss, const GradFn& analytic, double eps) {
  const std::vector<Tensor> grads = analytic(vars);
  GradCheckResult r;
  for (std::size_t vi = 0; vi < vars.size(); ++vi) {
    auto w = vars[vi].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const float orig = w[i];
      const float up = orig + static_cast<float>(eps);
      const float down = orig - static_cast<float>(eps);
      w[i] = up;
      const double lp = loss(vars);
      w[i] = down;
      const double lm = loss(vars);
      w[i] = orig;
      const double numeric = (lp - lm) / (static_cast<double>(up) - static_cast<double>(down));
      const double a = grads[vi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-2});
      r.max_rel_error = std::max(r.max_rel_error, std::abs(a - numeric) / denom);
      ++r.checked;
    }
  }
  return r;
}

}  // namespace

GradCheckResult grad_check(LayerKind kind, const GradCheckShape& s, double eps, std::uint64_t seed) {
  Rng rng(seed);
  switch (kind) {
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv:
    case LayerKind::pointwise_conv: {
      const std::size_t k = kind == LayerKind::pointwise_conv ? 1 : s.kernel;
      Tensor input = random_tensor({s.height, s.width, s.channels}, rng);
      Shape kshape = kind == LayerKind::depthwise_conv ? Shape{k, k, s.channels} : Shape{k, k, s.channels, s.units};
      const std::size_t bias_n = kind == LayerKind::depthwise_conv ? s.channels : s.units;
      Tensor kernel = random_tensor(kshape, rng);
      Tensor bias = random_tensor({bias_n}, rng);
      const std::size_t stride = kind == LayerKind::pointwise_conv ? 1 : s.stride;
      const Padding pad = kind == LayerKind::pointwise_conv ? Padding::valid : s.padding;
      auto fwd = [=](const std::vector<Tensor>& v) {
        if (kind == LayerKind::conv2d) return conv2d_forward(v[0], v[1], v[2], stride, pad);
        if (kind == LayerKind::depthwise_conv) return depthwise_conv_forward(v[0], v[1], v[2], stride, pad);
        return pointwise_conv_forward(v[0], v[1], v[2]);
      };
      const Tensor probe = random_tensor(fwd({input, kernel, bias}).shape(), rng);
      LossFn loss = [=](const std::vector<Tensor>& v) { return dot(fwd(v), probe); };
      GradFn grads = [=](const std::vector<Tensor>& v) {
        ParamGrads g = kind == LayerKind::conv2d           ? conv2d_backward(v[0], v[1], stride, pad, probe)
                       : kind == LayerKind::depthwise_conv ? depthwise_conv_backward(v[0], v[1], stride, pad, probe)
                                                           : pointwise_conv_backward(v[0], v[1], probe);
        return std::vector<Tensor>{g.input, g.weights, g.bias};
      };
      return compare({input, kernel, bias}, loss, grads, eps);
    }
    case LayerKind::dense: {
      Tensor x = random_tensor({s.input_dim}, rng);
      Tensor w = random_tensor({s.units, s.input_dim}, rng);
      Tensor b = random_tensor({s.units}, rng);
      const Tensor probe = random_tensor({s.units}, rng);
      LossFn loss = [=](const std::vector<Tensor>& v) { return dot(dense_forward(v[0], v[1], v[2]), probe); };
      GradFn grads = [=](const std::vector<Tensor>& v) {
        ParamGrads g = dense_backward(v[0], v[1], probe);
        return std::vector<Tensor>{g.input, g.weights, g.bias};
      };
      return compare({x, w, b}, loss, grads, eps);
    }
    case LayerKind::max_pool: {
      // Distinct, well separated values keep the argmax stable under +-eps.
      std::vector<float> vals(s.height * s.width * s.channels);
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = static_cast<float>(i) * 0.1f;
      rng.shuffle(vals);
      Tensor input({s.height, s.width, s.channels}, vals);
      const std::size_t size = std::max<std::size_t>(2, s.kernel - 1);
      const Tensor probe = random_tensor(max_pool_forward(input, size, size).output.shape(), rng);
      LossFn loss = [=](const std::vector<Tensor>& v) { return dot(max_pool_forward(v[0], size, size).output, probe); };
      GradFn grads = [=](const std::vector<Tensor>& v) {
        PoolResult r = max_pool_forward(v[0], size, size);
        return std::vector<Tensor>{max_pool_backward(v[0].shape(), r.argmax, probe)};
      };
      return compare({input}, loss, grads, eps);
    }
    case LayerKind::gru:
    case LayerKind::lstm: {
      const bool gru = kind == LayerKind::gru;
      const std::size_t gates = (gru ? 3 : 4) * s.units;
      Tensor xs = random_tensor({s.steps, s.input_dim}, rng);
      Tensor h0 = random_tensor({s.units}, rng, -0.5, 0.5);
      Tensor c0 = random_tensor({s.units}, rng, -0.5, 0.5);
      Tensor w = random_tensor({gates, s.input_dim}, rng, -0.5, 0.5);
      Tensor u = random_tensor({gates, s.units}, rng, -0.5, 0.5);
      Tensor b = random_tensor({gates}, rng, -0.5, 0.5);
      const Tensor probe = random_tensor({s.units}, rng);
      const std::size_t steps = s.steps, d = s.input_dim, n = s.units;

      auto step_input = [=](const Tensor& x, std::size_t t) {
        const auto v = x.values();
        return std::vector<float>(v.begin() + static_cast<std::ptrdiff_t>(t * d),
                                  v.begin() + static_cast<std::ptrdiff_t>((t + 1) * d));
      };
      LossFn loss = [=](const std::vector<Tensor>& v) {
        const RecurrentParams p{v[3], v[4], v[5]};
        std::vector<float> h(v[1].values().begin(), v[1].values().end());
        std::vector<float> c(v[2].values().begin(), v[2].values().end());
        for (std::size_t t = 0; t < steps; ++t) {
          if (gru) {
            h = gru_step(step_input(v[0], t), h, p);
          } else {
            LstmState st = lstm_step(step_input(v[0], t), h, c, p);
            h = std::move(st.h);
            c = std::move(st.c);
          }
        }
        return dot(h, probe);
      };
      GradFn grads = [=](const std::vector<Tensor>& v) {
        const RecurrentParams p{v[3], v[4], v[5]};
        std::vector<float> h(v[1].values().begin(), v[1].values().end());
        std::vector<float> c(v[2].values().begin(), v[2].values().end());
        std::vector<GruStepCache> gc(steps);
        std::vector<LstmStepCache> lc(steps);
        for (std::size_t t = 0; t < steps; ++t) {
          if (gru) {
            h = gru_step(step_input(v[0], t), h, p, &gc[t]);
          } else {
            LstmState st = lstm_step(step_input(v[0], t), h, c, p, &lc[t]);
            h = std::move(st.h);
            c = std::move(st.c);
          }
        }
        std::vector<Tensor> out{Tensor(v[0].shape()), Tensor({n}), Tensor({n}), Tensor(v[3].shape()),
                                Tensor(v[4].shape()), Tensor(v[5].shape())};
        std::vector<float> dh(probe.values().begin(), probe.values().end());
        std::vector<float> dc(n, 0.0f);
        for (std::size_t t = steps; t-- > 0;) {
          std::vector<float> dx;
          if (gru) {
            GruStepGrads g = gru_step_backward(gc[t], p, dh, out[3], out[4], out[5]);
            dx = std::move(g.dx);
            dh = std::move(g.dh);
          } else {
            LstmStepGrads g = lstm_step_backward(lc[t], p, dh, dc, out[3], out[4], out[5]);
            dx = std::move(g.dx);
            dh = std::move(g.dh);
            dc = std::move(g.dc);
          }
          std::copy(dx.begin(), dx.end(), out[0].values().begin() + static_cast<std::ptrdiff_t>(t * d));
        }
        std::copy(dh.begin(), dh.end(), out[1].values().begin());
        if (!gru) std::copy(dc.begin(), dc.end(), out[2].values().begin());
        return out;
      };
      return compare({xs, h0, c0, w, u, b}, loss, grads, eps);
    }
    default:
      throw std::invalid_argument(std::string("no gradient check for layer kind ") + to_string(kind));
  }
}

}  // namespace eyeedge::nn

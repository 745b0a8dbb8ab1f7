#include "eyeedge/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eyeedge::nn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

void require_rank(const Tensor& t, std::size_t rank, const char* name) {
  require(t.rank() == rank, std::string(name) + " must have rank " + std::to_string(rank) + ", got " +
                                shape_string(t.shape()));
}

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// y = W x + U h + b for all gate rows.
std::vector<float> gate_preactivations(const std::vector<float>& x, const std::vector<float>& h,
                                       const RecurrentParams& p) {
  const std::size_t rows = p.b.size();
  const std::size_t d = x.size();
  const std::size_t hd = h.size();
  require(p.w.rank() == 2 && p.w.dim(0) == rows && p.w.dim(1) == d,
          "recurrent W shape " + shape_string(p.w.shape()) + " incompatible with input of " + std::to_string(d));
  require(p.u.rank() == 2 && p.u.dim(0) == rows && p.u.dim(1) == hd,
          "recurrent U shape " + shape_string(p.u.shape()) + " incompatible with state of " + std::to_string(hd));
  const auto w = p.w.values();
  const auto u = p.u.values();
  const auto b = p.b.values();
  std::vector<float> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    float acc = b[r];
    const float* wr = w.data() + r * d;
    for (std::size_t k = 0; k < d; ++k) acc += wr[k] * x[k];
    const float* ur = u.data() + r * hd;
    for (std::size_t k = 0; k < hd; ++k) acc += ur[k] * h[k];
    out[r] = acc;
  }
  return out;
}

// Adds outer(dpre, v) into m (rows x v.size()) and returns m^T dpre restricted to `rows`.
void accumulate_outer(Tensor& m, const std::vector<float>& dpre, const std::vector<float>& v) {
  auto mv = m.values();
  const std::size_t cols = v.size();
  for (std::size_t r = 0; r < dpre.size(); ++r) {
    const float g = dpre[r];
    if (g == 0.0f) continue;
    float* row = mv.data() + r * cols;
    for (std::size_t k = 0; k < cols; ++k) row[k] += g * v[k];
  }
}

std::vector<float> transpose_times(const Tensor& m, const std::vector<float>& dpre) {
  const auto mv = m.values();
  const std::size_t cols = m.dim(1);
  std::vector<float> out(cols, 0.0f);
  for (std::size_t r = 0; r < dpre.size(); ++r) {
    const float g = dpre[r];
    if (g == 0.0f) continue;
    const float* row = mv.data() + r * cols;
    for (std::size_t k = 0; k < cols; ++k) out[k] += g * row[k];
  }
  return out;
}

}  // namespace

AxisPlan plan_axis(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding) {
  require(kernel > 0 && stride > 0, "kernel and stride must be positive");
  if (padding == Padding::valid) {
    require(in >= kernel, "input extent " + std::to_string(in) + " smaller than kernel " + std::to_string(kernel));
    return {(in - kernel) / stride + 1, 0};
  }
  const std::size_t out = (in + stride - 1) / stride;
  const std::size_t needed = (out - 1) * stride + kernel;
  const std::size_t pad_total = needed > in ? needed - in : 0;
  return {out, pad_total / 2};
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
                      Padding padding) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), f = kernel.dim(3);
  require(kernel.dim(2) == c, "conv2d kernel expects " + std::to_string(kernel.dim(2)) + " channels, input has " +
                                  std::to_string(c));
  require(bias.size() == f, "conv2d bias length mismatch");
  const AxisPlan py = plan_axis(h, kh, stride, padding);
  const AxisPlan px = plan_axis(w, kw, stride, padding);

  Tensor out({py.out, px.out, f});
  const auto in = input.values();
  const auto k = kernel.values();
  const auto b = bias.values();
  auto o = out.values();
  for (std::size_t oy = 0; oy < py.out; ++oy) {
    for (std::size_t ox = 0; ox < px.out; ++ox) {
      float* dst = o.data() + (oy * px.out + ox) * f;
      std::copy(b.begin(), b.end(), dst);
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(py.pad_before);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(px.pad_before);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          const float* src = in.data() + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * c;
          const float* kr = k.data() + (ky * kw + kx) * c * f;
          for (std::size_t ci = 0; ci < c; ++ci) {
            const float v = src[ci];
            const float* kc = kr + ci * f;
            for (std::size_t fi = 0; fi < f; ++fi) dst[fi] += v * kc[fi];
          }
        }
      }
    }
  }
  return out;
}

ParamGrads conv2d_backward(const Tensor& input, const Tensor& kernel, std::size_t stride, Padding padding,
                           const Tensor& grad_out) {
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), f = kernel.dim(3);
  const AxisPlan py = plan_axis(h, kh, stride, padding);
  const AxisPlan px = plan_axis(w, kw, stride, padding);
  require(grad_out.shape() == Shape{py.out, px.out, f}, "conv2d grad_out shape mismatch");

  ParamGrads g{Tensor(input.shape()), Tensor(kernel.shape()), Tensor({f})};
  const auto in = input.values();
  const auto k = kernel.values();
  const auto go = grad_out.values();
  auto gi = g.input.values();
  auto gk = g.weights.values();
  auto gb = g.bias.values();
  for (std::size_t oy = 0; oy < py.out; ++oy) {
    for (std::size_t ox = 0; ox < px.out; ++ox) {
      const float* gdst = go.data() + (oy * px.out + ox) * f;
      for (std::size_t fi = 0; fi < f; ++fi) gb[fi] += gdst[fi];
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(py.pad_before);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(px.pad_before);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          const std::size_t base = (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * c;
          const float* src = in.data() + base;
          float* gsrc = gi.data() + base;
          const std::size_t kbase = (ky * kw + kx) * c * f;
          for (std::size_t ci = 0; ci < c; ++ci) {
            const float* kc = k.data() + kbase + ci * f;
            float* gkc = gk.data() + kbase + ci * f;
            const float v = src[ci];
            float acc = 0.0f;
            for (std::size_t fi = 0; fi < f; ++fi) {
              acc += gdst[fi] * kc[fi];
              gkc[fi] += v * gdst[fi];
            }
            gsrc[ci] += acc;
          }
        }
      }
    }
  }
  return g;
}

Tensor depthwise_conv_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride,
                              Padding padding) {
  require_rank(input, 3, "depthwise input");
  require_rank(kernels, 3, "depthwise kernels");
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  const std::size_t kh = kernels.dim(0), kw = kernels.dim(1);
  require(kernels.dim(2) == c, "depthwise conv needs one kernel per channel: got " + std::to_string(kernels.dim(2)) +
                                   " kernels for " + std::to_string(c) + " channels");
  require(bias.size() == c, "depthwise bias length mismatch");
  const AxisPlan py = plan_axis(h, kh, stride, padding);
  const AxisPlan px = plan_axis(w, kw, stride, padding);

  Tensor out({py.out, px.out, c});
  const auto in = input.values();
  const auto k = kernels.values();
  const auto b = bias.values();
  auto o = out.values();
  for (std::size_t oy = 0; oy < py.out; ++oy) {
    for (std::size_t ox = 0; ox < px.out; ++ox) {
      float* dst = o.data() + (oy * px.out + ox) * c;
      std::copy(b.begin(), b.end(), dst);
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(py.pad_before);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(px.pad_before);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          const float* src = in.data() + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * c;
          const float* kr = k.data() + (ky * kw + kx) * c;
          for (std::size_t ci = 0; ci < c; ++ci) dst[ci] += src[ci] * kr[ci];
        }
      }
    }
  }
  return out;
}

ParamGrads depthwise_conv_backward(const Tensor& input, const Tensor& kernels, std::size_t stride, Padding padding,
                                   const Tensor& grad_out) {
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  const std::size_t kh = kernels.dim(0), kw = kernels.dim(1);
  const AxisPlan py = plan_axis(h, kh, stride, padding);
  const AxisPlan px = plan_axis(w, kw, stride, padding);
  require(grad_out.shape() == Shape{py.out, px.out, c}, "depthwise grad_out shape mismatch");

  ParamGrads g{Tensor(input.shape()), Tensor(kernels.shape()), Tensor({c})};
  const auto in = input.values();
  const auto k = kernels.values();
  const auto go = grad_out.values();
  auto gi = g.input.values();
  auto gk = g.weights.values();
  auto gb = g.bias.values();
  for (std::size_t oy = 0; oy < py.out; ++oy) {
    for (std::size_t ox = 0; ox < px.out; ++ox) {
      const float* gdst = go.data() + (oy * px.out + ox) * c;
      for (std::size_t ci = 0; ci < c; ++ci) gb[ci] += gdst[ci];
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(py.pad_before);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(px.pad_before);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          const std::size_t base = (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * c;
          const std::size_t kbase = (ky * kw + kx) * c;
          for (std::size_t ci = 0; ci < c; ++ci) {
            gi[base + ci] += gdst[ci] * k[kbase + ci];
            gk[kbase + ci] += gdst[ci] * in[base + ci];
          }
        }
      }
    }
  }
  return g;
}

Tensor pointwise_conv_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  require_rank(input, 3, "pointwise input");
  require(kernel.rank() == 4 && kernel.dim(0) == 1 && kernel.dim(1) == 1,
          "pointwise kernel must be 1x1xCxF, got " + shape_string(kernel.shape()));
  const std::size_t c = input.dim(2), f = kernel.dim(3);
  require(kernel.dim(2) == c, "pointwise kernel expects " + std::to_string(kernel.dim(2)) +
                                  " channels, input has " + std::to_string(c));
  require(bias.size() == f, "pointwise bias length mismatch");
  const std::size_t pixels = input.dim(0) * input.dim(1);
  Tensor out({input.dim(0), input.dim(1), f});
  const auto in = input.values();
  const auto k = kernel.values();
  const auto b = bias.values();
  auto o = out.values();
  for (std::size_t p = 0; p < pixels; ++p) {
    float* dst = o.data() + p * f;
    std::copy(b.begin(), b.end(), dst);
    const float* src = in.data() + p * c;
    for (std::size_t ci = 0; ci < c; ++ci) {
      const float v = src[ci];
      const float* kc = k.data() + ci * f;
      for (std::size_t fi = 0; fi < f; ++fi) dst[fi] += v * kc[fi];
    }
  }
  return out;
}

ParamGrads pointwise_conv_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out) {
  const std::size_t c = input.dim(2), f = kernel.dim(3);
  require(grad_out.shape() == Shape{input.dim(0), input.dim(1), f}, "pointwise grad_out shape mismatch");
  const std::size_t pixels = input.dim(0) * input.dim(1);
  ParamGrads g{Tensor(input.shape()), Tensor(kernel.shape()), Tensor({f})};
  const auto in = input.values();
  const auto k = kernel.values();
  const auto go = grad_out.values();
  auto gi = g.input.values();
  auto gk = g.weights.values();
  auto gb = g.bias.values();
  for (std::size_t p = 0; p < pixels; ++p) {
    const float* gdst = go.data() + p * f;
    const float* src = in.data() + p * c;
    float* gsrc = gi.data() + p * c;
    for (std::size_t fi = 0; fi < f; ++fi) gb[fi] += gdst[fi];
    for (std::size_t ci = 0; ci < c; ++ci) {
      const float* kc = k.data() + ci * f;
      float* gkc = gk.data() + ci * f;
      const float v = src[ci];
      float acc = 0.0f;
      for (std::size_t fi = 0; fi < f; ++fi) {
        acc += gdst[fi] * kc[fi];
        gkc[fi] += v * gdst[fi];
      }
      gsrc[ci] = acc;
    }
  }
  return g;
}

Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  require_rank(weights, 2, "dense weights");
  const std::size_t out_n = weights.dim(0), in_n = weights.dim(1);
  require(x.size() == in_n, "dense expects " + std::to_string(in_n) + " inputs, got " + std::to_string(x.size()));
  require(bias.size() == out_n, "dense bias length mismatch");
  Tensor y({out_n});
  const auto xv = x.values();
  const auto wv = weights.values();
  const auto bv = bias.values();
  auto yv = y.values();
  for (std::size_t r = 0; r < out_n; ++r) {
    const float* row = wv.data() + r * in_n;
    float acc = bv[r];
    for (std::size_t k = 0; k < in_n; ++k) acc += row[k] * xv[k];
    yv[r] = acc;
  }
  return y;
}

ParamGrads dense_backward(const Tensor& x, const Tensor& weights, const Tensor& grad_out) {
  const std::size_t out_n = weights.dim(0), in_n = weights.dim(1);
  require(grad_out.size() == out_n, "dense grad_out length mismatch");
  ParamGrads g{Tensor(x.shape()), Tensor(weights.shape()), Tensor({out_n})};
  const auto xv = x.values();
  const auto wv = weights.values();
  const auto go = grad_out.values();
  auto gx = g.input.values();
  auto gw = g.weights.values();
  auto gb = g.bias.values();
  for (std::size_t r = 0; r < out_n; ++r) {
    const float d = go[r];
    gb[r] = d;
    if (d == 0.0f) continue;
    const float* row = wv.data() + r * in_n;
    float* grow = gw.data() + r * in_n;
    for (std::size_t k = 0; k < in_n; ++k) {
      gx[k] += d * row[k];
      grow[k] = d * xv[k];
    }
  }
  return g;
}

PoolResult max_pool_forward(const Tensor& input, std::size_t size, std::size_t stride) {
  require_rank(input, 3, "max_pool input");
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  const AxisPlan py = plan_axis(h, size, stride, Padding::valid);
  const AxisPlan px = plan_axis(w, size, stride, Padding::valid);
  PoolResult r{Tensor({py.out, px.out, c}), std::vector<std::uint32_t>(py.out * px.out * c)};
  const auto in = input.values();
  auto o = r.output.values();
  for (std::size_t oy = 0; oy < py.out; ++oy) {
    for (std::size_t ox = 0; ox < px.out; ++ox) {
      for (std::size_t ci = 0; ci < c; ++ci) {
        float best = -std::numeric_limits<float>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t ky = 0; ky < size; ++ky) {
          for (std::size_t kx = 0; kx < size; ++kx) {
            const std::size_t idx = ((oy * stride + ky) * w + (ox * stride + kx)) * c + ci;
            if (in[idx] > best || (ky == 0 && kx == 0)) {
              best = in[idx];
              best_idx = idx;
            }
          }
        }
        const std::size_t oidx = (oy * px.out + ox) * c + ci;
        o[oidx] = best;
        r.argmax[oidx] = static_cast<std::uint32_t>(best_idx);
      }
    }
  }
  return r;
}

Tensor max_pool_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax, const Tensor& grad_out) {
  require(argmax.size() == grad_out.size(), "max_pool grad_out size mismatch");
  Tensor gi(input_shape);
  auto g = gi.values();
  const auto go = grad_out.values();
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += go[i];
  return gi;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (float& v : y.values()) v = v > 0.0f ? v : 0.0f;
  return y;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  Tensor g = grad_out;
  const auto in = input.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (!(in[i] > 0.0f)) gv[i] = 0.0f;
  }
  return g;
}

std::size_t recurrent_units(const RecurrentParams& p, std::size_t gates) {
  require(p.u.rank() == 2, "recurrent U must be rank 2");
  const std::size_t h = p.u.dim(1);
  require(p.u.dim(0) == gates * h && p.b.size() == gates * h && p.w.rank() == 2 && p.w.dim(0) == gates * h,
          "recurrent parameter shapes inconsistent with " + std::to_string(gates) + " gates of " +
              std::to_string(h) + " units");
  return h;
}

std::vector<float> gru_step(const std::vector<float>& x, const std::vector<float>& h, const RecurrentParams& p,
                            GruStepCache* cache) {
  const std::size_t n = recurrent_units(p, 3);
  require(h.size() == n, "GRU state length " + std::to_string(h.size()) + " != units " + std::to_string(n));
  require(x.size() == p.w.dim(1), "GRU input length mismatch");

  // z and r gates use the plain state; the candidate uses r * h.
  const auto wv = p.w.values();
  const auto uv = p.u.values();
  const auto bv = p.b.values();
  const std::size_t d = x.size();
  std::vector<float> z(n), r(n), cand(n), rh(n), hn(n);
  for (std::size_t j = 0; j < n; ++j) {
    float az = bv[j], ar = bv[n + j];
    const float* wz = wv.data() + j * d;
    const float* wr = wv.data() + (n + j) * d;
    for (std::size_t k = 0; k < d; ++k) {
      az += wz[k] * x[k];
      ar += wr[k] * x[k];
    }
    const float* uz = uv.data() + j * n;
    const float* ur = uv.data() + (n + j) * n;
    for (std::size_t k = 0; k < n; ++k) {
      az += uz[k] * h[k];
      ar += ur[k] * h[k];
    }
    z[j] = sigmoid(az);
    r[j] = sigmoid(ar);
  }
  for (std::size_t k = 0; k < n; ++k) rh[k] = r[k] * h[k];
  for (std::size_t j = 0; j < n; ++j) {
    float ac = bv[2 * n + j];
    const float* wc = wv.data() + (2 * n + j) * d;
    for (std::size_t k = 0; k < d; ++k) ac += wc[k] * x[k];
    const float* uc = uv.data() + (2 * n + j) * n;
    for (std::size_t k = 0; k < n; ++k) ac += uc[k] * rh[k];
    cand[j] = std::tanh(ac);
    hn[j] = (1.0f - z[j]) * h[j] + z[j] * cand[j];
  }
  if (cache) *cache = GruStepCache{x, h, std::move(z), std::move(r), std::move(cand)};
  return hn;
}

GruStepGrads gru_step_backward(const GruStepCache& cache, const RecurrentParams& p, const std::vector<float>& dh_next,
                               Tensor& dw, Tensor& du, Tensor& db) {
  const std::size_t n = cache.h.size();
  std::vector<float> dpre(3 * n);  // z, r, candidate pre-activations
  std::vector<float> dh(n);
  for (std::size_t j = 0; j < n; ++j) {
    const float g = dh_next[j];
    dh[j] = g * (1.0f - cache.z[j]);
    dpre[j] = g * (cache.cand[j] - cache.h[j]) * cache.z[j] * (1.0f - cache.z[j]);
    dpre[2 * n + j] = g * cache.z[j] * (1.0f - cache.cand[j] * cache.cand[j]);
  }
  // Candidate path through r * h.
  const auto uv = p.u.values();
  std::vector<float> drh(n, 0.0f);
  for (std::size_t j = 0; j < n; ++j) {
    const float g = dpre[2 * n + j];
    const float* uc = uv.data() + (2 * n + j) * n;
    for (std::size_t k = 0; k < n; ++k) drh[k] += g * uc[k];
  }
  std::vector<float> rh(n);
  for (std::size_t k = 0; k < n; ++k) {
    rh[k] = cache.r[k] * cache.h[k];
    dh[k] += drh[k] * cache.r[k];
    const float dr = drh[k] * cache.h[k];
    dpre[n + k] = dr * cache.r[k] * (1.0f - cache.r[k]);
  }

  accumulate_outer(dw, dpre, cache.x);
  {
    // U rows for z and r multiply h; candidate rows multiply r * h.
    auto duv = du.values();
    for (std::size_t row = 0; row < 3 * n; ++row) {
      const float g = dpre[row];
      if (g == 0.0f) continue;
      const std::vector<float>& v = row < 2 * n ? cache.h : rh;
      float* dst = duv.data() + row * n;
      for (std::size_t k = 0; k < n; ++k) dst[k] += g * v[k];
    }
  }
  auto dbv = db.values();
  for (std::size_t row = 0; row < 3 * n; ++row) dbv[row] += dpre[row];

  GruStepGrads out;
  out.dx = transpose_times(p.w, dpre);
  for (std::size_t row = 0; row < 2 * n; ++row) {
    const float g = dpre[row];
    if (g == 0.0f) continue;
    const float* ur = uv.data() + row * n;
    for (std::size_t k = 0; k < n; ++k) dh[k] += g * ur[k];
  }
  out.dh = std::move(dh);
  return out;
}

LstmState lstm_step(const std::vector<float>& x, const std::vector<float>& h, const std::vector<float>& c,
                    const RecurrentParams& p, LstmStepCache* cache) {
  const std::size_t n = recurrent_units(p, 4);
  require(h.size() == n && c.size() == n, "LSTM state length mismatch with " + std::to_string(n) + " units");
  const std::vector<float> pre = gate_preactivations(x, h, p);
  LstmState next{std::vector<float>(n), std::vector<float>(n)};
  std::vector<float> i(n), f(n), o(n), g(n), ct(n);
  for (std::size_t j = 0; j < n; ++j) {
    i[j] = sigmoid(pre[j]);
    f[j] = sigmoid(pre[n + j]);
    o[j] = sigmoid(pre[2 * n + j]);
    g[j] = std::tanh(pre[3 * n + j]);
    next.c[j] = f[j] * c[j] + i[j] * g[j];
    ct[j] = std::tanh(next.c[j]);
    next.h[j] = o[j] * ct[j];
  }
  if (cache) {
    *cache = LstmStepCache{x, h, c, std::move(i), std::move(f), std::move(o), std::move(g), std::move(ct)};
  }
  return next;
}

LstmStepGrads lstm_step_backward(const LstmStepCache& cache, const RecurrentParams& p,
                                 const std::vector<float>& dh_next, const std::vector<float>& dc_next, Tensor& dw,
                                 Tensor& du, Tensor& db) {
  const std::size_t n = cache.h.size();
  std::vector<float> dpre(4 * n);
  LstmStepGrads out;
  out.dc.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const float dct = dc_next[j] + dh_next[j] * cache.o[j] * (1.0f - cache.c_next_tanh[j] * cache.c_next_tanh[j]);
    const float d_o = dh_next[j] * cache.c_next_tanh[j];
    const float d_i = dct * cache.g[j];
    const float d_g = dct * cache.i[j];
    const float d_f = dct * cache.c[j];
    out.dc[j] = dct * cache.f[j];
    dpre[j] = d_i * cache.i[j] * (1.0f - cache.i[j]);
    dpre[n + j] = d_f * cache.f[j] * (1.0f - cache.f[j]);
    dpre[2 * n + j] = d_o * cache.o[j] * (1.0f - cache.o[j]);
    dpre[3 * n + j] = d_g * (1.0f - cache.g[j] * cache.g[j]);
  }
  accumulate_outer(dw, dpre, cache.x);
  accumulate_outer(du, dpre, cache.h);
  auto dbv = db.values();
  for (std::size_t row = 0; row < 4 * n; ++row) dbv[row] += dpre[row];
  out.dx = transpose_times(p.w, dpre);
  out.dh = transpose_times(p.u, dpre);
  return out;
}

}  // namespace eyeedge::nn

#pragma once

#include <cstdint>

#include "eyeedge/nn/model.hpp"

namespace eyeedge::nn {

// Shape of the random problem a gradient check builds. Spatial layers use
// height x width x channels; dense and recurrent layers use input_dim and
// units; recurrent layers unroll `steps` time steps from a random state.
struct GradCheckShape {
  std::size_t height = 5;
  std::size_t width = 5;
  std::size_t channels = 2;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  Padding padding = Padding::same;
  std::size_t units = 3;
  std::size_t input_dim = 4;
  std::size_t steps = 3;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;  // number of scalar derivatives compared
};

// Compares the analytic backward pass of one layer kind against central
// differences of loss = sum(output * probe) for a random probe. Every input
// and parameter entry is checked. Relative error is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-2).
GradCheckResult grad_check(LayerKind kind, const GradCheckShape& shape, double eps, std::uint64_t seed);

}  // namespace eyeedge::nn

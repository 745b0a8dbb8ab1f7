#pragma once

#include <stdexcept>

#include "eyeedge/nn/model.hpp"

namespace eyeedge::opt {

struct QuantizationRangeError : std::range_error {
  using std::range_error::range_error;
};

// Rounds every parameter (weights and biases) to binary16, nearest-even.
// The result stores half bits; topology, window and masks are unchanged.
// Throws QuantizationRangeError naming the first layer with |w| > 65504
// or a non-finite value, and std::invalid_argument for non-single input.
nn::ModelGraph quantize_half(const nn::ModelGraph& graph);

}  // namespace eyeedge::opt

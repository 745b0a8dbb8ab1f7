#include "eyeedge/opt/quantize.hpp"

#include <cmath>
#include <sstream>

#include "eyeedge/nn/half.hpp"

namespace eyeedge::opt {

using nn::DType;
using nn::Tensor;

nn::ModelGraph quantize_half(const nn::ModelGraph& graph) {
  if (graph.dtype != DType::f32) throw std::invalid_argument("quantize_half expects a single-precision graph");
  nn::ModelGraph out = graph;
  out.dtype = DType::f16;
  for (std::size_t li = 0; li < out.layers.size(); ++li) {
    nn::Layer& layer = out.layers[li];
    for (Tensor& t : layer.params) {
      std::vector<std::uint16_t> bits;
      bits.reserve(t.size());
      for (float v : t.values()) {
        if (!(std::fabs(v) <= nn::kHalfMax)) {
          std::ostringstream msg;
          msg << "layer " << li << " (" << nn::to_string(layer.spec.kind) << ") has weight " << v
              << " outside the half-precision range";
          throw QuantizationRangeError(msg.str());
        }
        bits.push_back(nn::float_to_half(v));
      }
      t = Tensor::from_half_bits(t.shape(), std::move(bits));
    }
  }
  return out;
}

}  // namespace eyeedge::opt

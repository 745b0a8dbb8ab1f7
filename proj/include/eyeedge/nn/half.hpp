#pragma once

#include <cstdint>

namespace eyeedge::nn {

inline constexpr float kHalfMax = 65504.0f;

// IEEE-754 binary32 -> binary16, round to nearest, ties to even.
// Overflow produces infinity; NaN stays NaN.
std::uint16_t float_to_half(float value);

// Exact widening binary16 -> binary32.
float half_to_float(std::uint16_t bits);

inline float round_to_half(float value) { return half_to_float(float_to_half(value)); }

}  // namespace eyeedge::nn

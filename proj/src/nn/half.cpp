#include "eyeedge/nn/half.hpp"

#include <bit>

namespace eyeedge::nn {

namespace {

// Shifts `mant` right by `shift` bits, rounding to nearest even.
std::uint32_t shift_round_even(std::uint32_t mant, std::uint32_t shift) {
  const std::uint32_t result = mant >> shift;
  const std::uint32_t rem = mant & ((1u << shift) - 1u);
  const std::uint32_t halfway = 1u << (shift - 1u);
  if (rem > halfway || (rem == halfway && (result & 1u))) return result + 1u;
  return result;
}

}  // namespace

std::uint16_t float_to_half(float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  const auto sign = static_cast<std::uint16_t>((bits >> 16) & 0x8000u);
  const std::uint32_t mag = bits & 0x7FFFFFFFu;

  if (mag >= 0x7F800000u) {  // inf / nan
    if (mag == 0x7F800000u) return sign | 0x7C00u;
    return static_cast<std::uint16_t>(sign | 0x7E00u | ((mag >> 13) & 0x3FFu));
  }
  if (mag >= 0x477FF000u) return sign | 0x7C00u;  // rounds past 65504
  if (mag < 0x33000000u) return sign;               // below half of the smallest subnormal
  if (mag < 0x38800000u) {                           // half subnormal range
    const std::uint32_t exp = mag >> 23;
    const std::uint32_t mant = (mag & 0x7FFFFFu) | 0x800000u;
    return static_cast<std::uint16_t>(sign | shift_round_even(mant, 126u - exp));
  }
  // Normal: rebias the exponent (127 -> 15) and round the low 13 mantissa bits.
  // A carry out of the mantissa correctly bumps the exponent.
  return static_cast<std::uint16_t>(sign | shift_round_even(mag - 0x38000000u, 13u));
}

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1Fu;
  std::uint32_t mant = h & 0x3FFu;

  std::uint32_t bits = 0;
  if (exp == 0x1F) {
    bits = sign | 0x7F800000u | (mant << 13);
  } else if (exp != 0) {
    bits = sign | ((exp + 112u) << 23) | (mant << 13);
  } else if (mant == 0) {
    bits = sign;
  } else {
    // Subnormal half becomes a normal float.
    std::uint32_t e = 113;
    while ((mant & 0x400u) == 0) {
      mant <<= 1;
      --e;
    }
    bits = sign | (e << 23) | ((mant & 0x3FFu) << 13);
  }
  return std::bit_cast<float>(bits);
}

}  // namespace eyeedge::nn

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/half.hpp"

#include <bit>
#include <cmath>

namespace oaken {

namespace {

// Round-to-nearest-even by bit manipulation; finite and non-finite inputs.
std::uint16_t float_to_half_rne(float value) {
  auto bits = std::bit_cast<std::uint32_t>(value);
  const auto sign = static_cast<std::uint16_t>((bits >> 16) & 0x8000u);
  bits &= 0x7fffffffu;
  if (bits >= 0x7f800000u) return static_cast<std::uint16_t>(sign | (bits > 0x7f800000u ? 0x7e00u : 0x7c00u));
  if (bits >= (143u << 23)) return static_cast<std::uint16_t>(sign | 0x7c00u);  // >= 2^16
  if (bits < (113u << 23)) {
    // Below the smallest normal half: let the FPU round against a magic bias
    // whose ulp is 2^-24.
    constexpr std::uint32_t magic = ((127u - 15u) + (23u - 10u) + 1u) << 23;
    const float f = std::bit_cast<float>(bits) + std::bit_cast<float>(magic);
    return static_cast<std::uint16_t>(sign | (std::bit_cast<std::uint32_t>(f) - magic));
  }
  const std::uint32_t odd = (bits >> 13) & 1u;
  bits += (static_cast<std::uint32_t>(15 - 127) << 23) + 0xfffu + odd;
  return static_cast<std::uint16_t>(sign | (bits >> 13));
}

std::uint16_t float_to_half_generic(float value, HalfRounding mode) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  const auto sign = static_cast<std::uint16_t>((bits >> 16) & 0x8000u);
  if (std::isnan(value)) return static_cast<std::uint16_t>(sign | 0x7e00u);
  if (std::isinf(value)) return static_cast<std::uint16_t>(sign | 0x7c00u);
  const double magnitude = std::fabs(static_cast<double>(value));
  if (magnitude == 0.0) return sign;

  const bool negative = sign != 0;
  // Rounding the magnitude up means rounding away from zero.
  bool round_up_on_fraction = false;
  switch (mode) {
    case HalfRounding::NearestEven: break;
    case HalfRounding::TowardPositive: round_up_on_fraction = !negative; break;
    case HalfRounding::TowardNegative: round_up_on_fraction = negative; break;
  }

  int exponent = 0;
  std::frexp(magnitude, &exponent);
  const int unbiased = exponent - 1;
  const int quantum_exp = unbiased >= -14 ? unbiased - 10 : -24;
  const double scaled = std::ldexp(magnitude, -quantum_exp);
  double integral = std::floor(scaled);
  const double fraction = scaled - integral;
  if (mode == HalfRounding::NearestEven) {
    const bool odd = std::fmod(integral, 2.0) != 0.0;
    if (fraction > 0.5 || (fraction == 0.5 && odd)) integral += 1.0;
  } else if (round_up_on_fraction && fraction > 0.0) {
    integral += 1.0;
  }

  const auto n = static_cast<std::uint32_t>(integral);
  std::uint32_t encoded = 0;
  if (quantum_exp == -24) {
    encoded = n;  // subnormal; n == 1024 carries into the smallest normal
  } else {
    encoded = (static_cast<std::uint32_t>(unbiased + 15) << 10) + (n - 1024u);
  }
  if (encoded >= 0x7c00u) {
    const bool toward_zero = mode != HalfRounding::NearestEven && !round_up_on_fraction;
    encoded = toward_zero ? 0x7bffu : 0x7c00u;
  }
  return static_cast<std::uint16_t>(sign | encoded);
}

}  // namespace

std::uint16_t float_to_half_bits(float value, HalfRounding mode) {
  return mode == HalfRounding::NearestEven ? float_to_half_rne(value) : float_to_half_generic(value, mode);
}

float half_bits_to_float(std::uint16_t bits) {
  const bool negative = (bits & 0x8000u) != 0;
  const int exponent = (bits >> 10) & 0x1f;
  const int mantissa = bits & 0x3ff;
  float magnitude = 0.0f;
  if (exponent == 0) {
    magnitude = std::ldexp(static_cast<float>(mantissa), -24);
  } else if (exponent == 31) {
    magnitude = mantissa == 0 ? INFINITY : NAN;
  } else {
    magnitude = std::ldexp(static_cast<float>(mantissa + 1024), exponent - 25);
  }
  return negative ? -magnitude : magnitude;
}

bool is_half_exact(float value) {
  if (!std::isfinite(value)) return false;
  return half_bits_to_float(float_to_half_bits(value)) == value;
}

float half_ulp(float value) {
  const float magnitude = std::fabs(value);
  if (!(magnitude >= std::ldexp(1.0f, -14))) return std::ldexp(1.0f, -24);
  int exponent = 0;
  std::frexp(magnitude, &exponent);
  return std::ldexp(1.0f, exponent - 1 - 10);
}

}  // namespace oaken

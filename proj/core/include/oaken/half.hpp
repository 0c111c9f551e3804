// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// IEEE 754 binary16 conversion helpers.

#pragma once

#include <cstdint>

namespace oaken {

enum class HalfRounding : std::uint8_t { NearestEven, TowardPositive, TowardNegative };

std::uint16_t float_to_half_bits(float value, HalfRounding mode = HalfRounding::NearestEven);
float half_bits_to_float(std::uint16_t bits);

inline float round_to_half(float value, HalfRounding mode = HalfRounding::NearestEven) {
  return half_bits_to_float(float_to_half_bits(value, mode));
}

bool is_half_exact(float value);

/// Spacing between adjacent binary16 values at the magnitude of `value`.
float half_ulp(float value);

inline constexpr float kHalfMax = 65504.0f;

}  // namespace oaken

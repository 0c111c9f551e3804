// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Online three-group quantization with group shift.
//
// decompose() assigns every element to a group by comparing against the
// offline thresholds:
//
//   outer   x < t_lo_outer                   or  x > t_hi_outer
//   middle  t_lo_outer <= x < t_lo_inner     or  t_hi_inner < x <= t_hi_outer
//   inner   t_lo_inner <= x <= t_hi_inner
//
// Outer and middle values are shifted by the nearest threshold on their side
// before quantization, which narrows both groups to a band around zero. The
// middle group is quantized to 4-bit unsigned codes over its signed residual
// range. Inner and outer groups use sign-magnitude: 4 magnitude bits over
// [0, max |residual|] plus a separate sign bit. Scales are computed per token,
// per group.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oaken/group_label.hpp"
#include "oaken/kv_model.hpp"
#include "oaken/profiler.hpp"

namespace oaken {

inline constexpr unsigned kCodeLevels = 15;  // 2^4 - 1

/// Per-token, per-group range and scaling factor. min and max are binary16
/// values because they are stored in the token's scale record. sigma = 0 marks
/// a degenerate (empty or constant) group.
struct GroupScale {
  float min = 0.0f;
  float max = 0.0f;
  float sigma = 0.0f;

  /// sigma = 15 / (max - min), or 0 when max <= min.
  static GroupScale from_range(float min, float max);
  bool degenerate() const { return sigma == 0.0f; }
  bool operator==(const GroupScale&) const = default;
};

struct QuantizedToken {
  std::vector<GroupLabel> labels;
  std::vector<std::uint8_t> codes;  // 4-bit, one per element
  std::vector<std::int8_t> signs;   // +1 / -1 for inner and outer, 0 for middle
  GroupScale middle;
  GroupScale inner;
  GroupScale outer;
  TokenOrigin origin;

  std::size_t size() const { return labels.size(); }
  std::size_t num_outliers() const;
  /// Throws ContractError when codes, signs and labels disagree, including a
  /// middle label whose side differs from what its code reconstructs to.
  void validate() const;
  bool operator==(const QuantizedToken&) const = default;
};

GroupLabel classify(float x, const ThresholdQuad& quad);
std::vector<GroupLabel> decompose(std::span<const float> values, const ThresholdQuad& quad);

/// Group-shift residual. Throws ContractError if `label` is not classify(x).
double shift(float x, GroupLabel label, const ThresholdQuad& quad);
double unshift(double residual, GroupLabel label, const ThresholdQuad& quad);

/// Middle residual represented by `code` under `scale`.
double middle_residual(std::uint8_t code, const GroupScale& scale);
/// Side a middle code decodes to: High when its residual is >= 0.
GroupLabel middle_label(std::uint8_t code, const GroupScale& scale);

QuantizedToken quantize_token(const KvView& vector, const ThresholdQuad& quad,
                              const GroupConfig& config);
std::vector<float> dequantize_token(const QuantizedToken& q, const ThresholdQuad& quad);

}  // namespace oaken

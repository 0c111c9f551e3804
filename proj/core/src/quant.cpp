// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oaken/error.hpp"
#include "oaken/half.hpp"

namespace oaken {
namespace {

// Largest binary16 value <= v.
float half_floor(double v) {
  float f = static_cast<float>(v);
  if (static_cast<double>(f) > v) f = std::nextafter(f, -std::numeric_limits<float>::infinity());
  const float h = round_to_half(f, HalfRounding::TowardNegative);
  if (!std::isfinite(h)) throw ContractError("group residual exceeds half-precision range");
  return h;
}

// Smallest binary16 value >= v.
float half_ceil(double v) {
  float f = static_cast<float>(v);
  if (static_cast<double>(f) < v) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  const float h = round_to_half(f, HalfRounding::TowardPositive);
  if (!std::isfinite(h)) throw ContractError("group residual exceeds half-precision range");
  return h;
}

std::uint8_t quantize_level(double offset, float sigma) {
  if (sigma == 0.0f) return 0;
  const double level = std::round(offset * static_cast<double>(sigma));
  return static_cast<std::uint8_t>(std::clamp(level, 0.0, static_cast<double>(kCodeLevels)));
}

// Middle scale whose grid puts residual 0 exactly halfway between codes
// `pivot` and `pivot + 1`, so negative residuals always decode below zero and
// positive ones above. min and max are odd multiples of a step with at most
// six significant bits, which keeps both exactly representable in binary16.
GroupScale zero_aligned_scale(double rmin, double rmax, unsigned& pivot) {
  const double below = std::max(-rmin, 0.0);
  const double above = std::max(rmax, 0.0);
  double best = std::numeric_limits<double>::infinity();
  for (unsigned j = 0; j < kCodeLevels; ++j) {
    const double step = std::max(below / (j + 0.5), above / (kCodeLevels - 0.5 - j));
    if (step < best) {
      best = step;
      pivot = j;
    }
  }
  int exponent = 0;
  std::frexp(best / 2.0, &exponent);
  const double quantum = std::max(std::ldexp(1.0, exponent - 6), std::ldexp(1.0, -24));
  const double half_step = std::ceil(best / 2.0 / quantum) * quantum;
  const auto lo = static_cast<float>(-(2.0 * pivot + 1.0) * half_step);
  const auto hi = static_cast<float>((2.0 * kCodeLevels - 1.0 - 2.0 * pivot) * half_step);
  if (!is_half_exact(lo) || !is_half_exact(hi)) {
    throw ContractError("middle residual range exceeds half-precision range");
  }
  return GroupScale::from_range(lo, hi);
}

}  // namespace

GroupScale GroupScale::from_range(float min, float max) {
  GroupScale s{min, max, 0.0f};
  if (max > min) s.sigma = static_cast<float>(kCodeLevels) / (max - min);
  return s;
}

std::size_t QuantizedToken::num_outliers() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), is_outlier));
}

void QuantizedToken::validate() const {
  if (codes.size() != labels.size() || signs.size() != labels.size()) {
    throw ContractError("quantized token arrays have inconsistent lengths");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (codes[i] > kCodeLevels) {
      throw ContractError("code " + std::to_string(codes[i]) + " at element " + std::to_string(i) +
                          " exceeds 4 bits");
    }
    const bool outlier = is_outlier(labels[i]);
    if (outlier && signs[i] != 1 && signs[i] != -1) {
      throw ContractError("outlier element " + std::to_string(i) + " lacks a sign");
    }
    if (!outlier && signs[i] != 0) {
      throw ContractError("middle element " + std::to_string(i) + " carries a sign");
    }
    if (labels[i] == GroupLabel::OuterHigh && signs[i] != 1) {
      throw ContractError("outer-high element " + std::to_string(i) + " has negative residual");
    }
    if (labels[i] == GroupLabel::OuterLow && signs[i] != -1) {
      throw ContractError("outer-low element " + std::to_string(i) + " has positive residual");
    }
    if (!outlier && middle_label(codes[i], middle) != labels[i]) {
      throw ContractError("middle element " + std::to_string(i) +
                          " decodes to the opposite side of zero");
    }
  }
}

GroupLabel classify(float x, const ThresholdQuad& quad) {
  if (x < quad.t_lo_outer) return GroupLabel::OuterLow;
  if (x > quad.t_hi_outer) return GroupLabel::OuterHigh;
  if (x < quad.t_lo_inner) return GroupLabel::MiddleLow;
  if (x > quad.t_hi_inner) return GroupLabel::MiddleHigh;
  return GroupLabel::Inner;
}

std::vector<GroupLabel> decompose(std::span<const float> values, const ThresholdQuad& quad) {
  std::vector<GroupLabel> labels(values.size());
  std::transform(values.begin(), values.end(), labels.begin(),
                 [&](float x) { return classify(x, quad); });
  return labels;
}

double shift(float x, GroupLabel label, const ThresholdQuad& quad) {
  if (classify(x, quad) != label) {
    throw ContractError("value " + std::to_string(x) + " does not belong to group " +
                        std::string(to_string(label)));
  }
  const double v = x;
  switch (label) {
    case GroupLabel::OuterHigh: return v - quad.t_hi_outer;
    case GroupLabel::OuterLow: return v - quad.t_lo_outer;
    case GroupLabel::MiddleHigh: return v - quad.t_hi_inner;
    case GroupLabel::MiddleLow: return v - quad.t_lo_inner;
    case GroupLabel::Inner: break;
  }
  return v;
}

double unshift(double residual, GroupLabel label, const ThresholdQuad& quad) {
  switch (label) {
    case GroupLabel::OuterHigh: return residual + quad.t_hi_outer;
    case GroupLabel::OuterLow: return residual + quad.t_lo_outer;
    case GroupLabel::MiddleHigh: return residual + quad.t_hi_inner;
    case GroupLabel::MiddleLow: return residual + quad.t_lo_inner;
    case GroupLabel::Inner: break;
  }
  return residual;
}

double middle_residual(std::uint8_t code, const GroupScale& scale) {
  if (scale.degenerate()) return scale.min;
  return static_cast<double>(code) / static_cast<double>(scale.sigma) + scale.min;
}

GroupLabel middle_label(std::uint8_t code, const GroupScale& scale) {
  return middle_residual(code, scale) >= 0.0 ? GroupLabel::MiddleHigh : GroupLabel::MiddleLow;
}

QuantizedToken quantize_token(const KvView& vector, const ThresholdQuad& quad,
                              const GroupConfig& config) {
  config.validate();
  quad.validate();
  const auto values = vector.values;
  const std::size_t n = values.size();

  QuantizedToken q;
  q.origin = vector.origin;
  q.labels = decompose(values, quad);
  q.codes.assign(n, 0);
  q.signs.assign(n, 0);

  std::vector<double> residual(n);
  double mid_lo = std::numeric_limits<double>::infinity();
  double mid_hi = -std::numeric_limits<double>::infinity();
  double inner_max = 0.0;
  double outer_max = 0.0;
  bool any_middle = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(values[i])) throw ContractError("non-finite value at element " + std::to_string(i));
    const GroupLabel label = q.labels[i];
    const double r = shift(values[i], label, quad);
    residual[i] = r;
    switch (group_of(label)) {
      case Group::Middle:
        any_middle = true;
        mid_lo = std::min(mid_lo, r);
        mid_hi = std::max(mid_hi, r);
        break;
      case Group::Inner: inner_max = std::max(inner_max, std::fabs(r)); break;
      case Group::Outer: outer_max = std::max(outer_max, std::fabs(r)); break;
    }
  }

  q.inner = GroupScale::from_range(0.0f, half_ceil(inner_max));
  q.outer = GroupScale::from_range(0.0f, half_ceil(outer_max));
  for (std::size_t i = 0; i < n; ++i) {
    const Group g = group_of(q.labels[i]);
    if (g == Group::Middle) continue;
    const GroupScale& s = g == Group::Inner ? q.inner : q.outer;
    q.codes[i] = quantize_level(std::fabs(residual[i]), s.sigma);
    q.signs[i] = residual[i] < 0.0 ? -1 : 1;
  }

  if (any_middle) {
    auto encode_middle = [&](const GroupScale& s) {
      bool consistent = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (group_of(q.labels[i]) != Group::Middle) continue;
        q.codes[i] = quantize_level(residual[i] - s.min, s.sigma);
        consistent = consistent && middle_label(q.codes[i], s) == q.labels[i];
      }
      return consistent;
    };
    q.middle = GroupScale::from_range(half_floor(mid_lo), half_ceil(mid_hi));
    if (!encode_middle(q.middle)) {
      unsigned pivot = 0;
      q.middle = zero_aligned_scale(mid_lo, mid_hi, pivot);
      encode_middle(q.middle);
      // Only rounding noise at |residual| ~ 0 can land on the wrong side here.
      for (std::size_t i = 0; i < n; ++i) {
        if (q.labels[i] == GroupLabel::MiddleLow && q.codes[i] > pivot) {
          q.codes[i] = static_cast<std::uint8_t>(pivot);
        } else if (q.labels[i] == GroupLabel::MiddleHigh && q.codes[i] <= pivot) {
          q.codes[i] = static_cast<std::uint8_t>(pivot + 1);
        }
      }
    }
  }
  q.validate();
  return q;
}

std::vector<float> dequantize_token(const QuantizedToken& q, const ThresholdQuad& quad) {
  std::vector<float> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const std::uint8_t code = q.codes[i];
    double x = 0.0;
    switch (group_of(q.labels[i])) {
      case Group::Middle: {
        const double r = middle_residual(code, q.middle);
        x = r >= 0.0 ? r + quad.t_hi_inner : r + quad.t_lo_inner;
        break;
      }
      case Group::Inner: {
        const double mag = q.inner.degenerate() ? 0.0 : code / static_cast<double>(q.inner.sigma);
        x = q.signs[i] < 0 ? -mag : mag;
        break;
      }
      case Group::Outer: {
        const double mag = q.outer.degenerate() ? 0.0 : code / static_cast<double>(q.outer.sigma);
        x = q.signs[i] < 0 ? quad.t_lo_outer - mag : quad.t_hi_outer + mag;
        break;
      }
    }
    out[i] = static_cast<float>(x);
  }
  return out;
}

}  // namespace oaken

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

namespace oaken {

enum class Group : std::uint8_t { Outer, Middle, Inner };

/// Group membership plus, for outer and middle, the side of zero the element
/// falls on. Enumerators are ordered from most negative to most positive.
enum class GroupLabel : std::uint8_t { OuterLow, MiddleLow, Inner, MiddleHigh, OuterHigh };

constexpr Group group_of(GroupLabel label) {
  switch (label) {
    case GroupLabel::OuterLow:
    case GroupLabel::OuterHigh: return Group::Outer;
    case GroupLabel::MiddleLow:
    case GroupLabel::MiddleHigh: return Group::Middle;
    case GroupLabel::Inner: break;
  }
  return Group::Inner;
}

constexpr bool is_outlier(GroupLabel label) { return group_of(label) != Group::Middle; }

constexpr bool is_high_side(GroupLabel label) {
  return label == GroupLabel::MiddleHigh || label == GroupLabel::OuterHigh;
}

constexpr std::string_view to_string(GroupLabel label) {
  switch (label) {
    case GroupLabel::OuterLow: return "outer-low";
    case GroupLabel::MiddleLow: return "middle-low";
    case GroupLabel::Inner: return "inner";
    case GroupLabel::MiddleHigh: return "middle-high";
    case GroupLabel::OuterHigh: return "outer-high";
  }
  return "?";
}

}  // namespace oaken

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Offline outlier-threshold profiling.
//
// A ThresholdQuad holds the four cuts that split a KV vector into the outer,
// middle and inner groups. Quads are extracted per (layer, kind) from sample
// runs with order statistics and averaged across runs. The online path only
// compares against these cuts; online_topk_grouping is the exact per-vector
// oracle used to validate them.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oaken/group_label.hpp"
#include "oaken/kv_model.hpp"

namespace oaken {

struct ThresholdQuad {
  float t_lo_outer = 0.0f;
  float t_lo_inner = 0.0f;
  float t_hi_inner = 0.0f;
  float t_hi_outer = 0.0f;

  /// t_lo_outer <= t_lo_inner <= 0 <= t_hi_inner <= t_hi_outer, all finite.
  bool is_ordered() const;
  /// Throws ContractError unless is_ordered().
  void validate() const;
  bool operator==(const ThresholdQuad&) const = default;
};

/// Number of elements each signed outer tail and the inner band hold for a
/// vector of `n` elements: round-half-up of ratio * n.
struct GroupCounts {
  std::size_t outer_per_tail = 0;
  std::size_t inner = 0;
};
GroupCounts group_counts(std::size_t n, const GroupConfig& config);

/// Cut between the k-th and (k+1)-th smallest of `values` (1-based), taken as
/// their midpoint. k == 0 gives a value just below the minimum, k == n just
/// above the maximum. Reorders `values`.
float order_statistic_cut(std::span<float> values, std::size_t k);

/// Extracts the four thresholds from one sample set.
///
/// Outer cuts are signed tails of ratio_outer / 2 each; the inner cut is taken
/// on |x| at ratio_inner and mirrored around zero. Throws ProfilingError when
/// fewer than 2 / min(non-zero ratio) values are given, when all values are
/// equal, or when the inner band would not nest inside the outer cuts.
ThresholdQuad extract_quad(std::span<const float> values, const GroupConfig& config);

/// Partition of a trace's tokens into profiling runs.
struct RunPartition {
  std::vector<std::vector<std::uint32_t>> runs;

  /// `num_runs` near-equal contiguous runs.
  static RunPartition contiguous(std::uint32_t num_tokens, std::uint32_t num_runs);
  /// Throws ConfigError unless every token in [0, num_tokens) appears exactly once.
  void validate(std::uint32_t num_tokens) const;
};

struct ProfileProvenance {
  std::uint32_t num_runs = 0;
  GroupConfig group_config;
  std::string source_trace_digest;

  bool operator==(const ProfileProvenance&) const = default;
};

struct ThresholdProfile {
  std::map<std::pair<std::uint32_t, KvKind>, ThresholdQuad> quads;
  ProfileProvenance provenance;

  /// Throws LookupError for a (layer, kind) that was not profiled.
  const ThresholdQuad& at(std::uint32_t layer, KvKind kind) const;
  bool operator==(const ThresholdProfile&) const = default;
};

/// Per (layer, kind): extract_quad on every run, then the unweighted mean of
/// each threshold across runs.
ThresholdProfile profile(const KvTrace& trace, const GroupConfig& config,
                         const RunPartition& runs);

/// Exact per-vector grouping by sorting: the outer_per_tail most negative and
/// most positive elements (ties broken by (value, index)) are outer, then the
/// `inner` smallest remaining magnitudes are inner. Validation oracle only.
std::vector<GroupLabel> online_topk_grouping(std::span<const float> values,
                                             const GroupConfig& config);

}  // namespace oaken

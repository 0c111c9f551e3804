// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Threshold profile file: a JSON document
//
//   {
//     "format": "oaken-threshold-profile",
//     "version": 1,
//     "group_config": {"ratio_outer", "ratio_middle", "ratio_inner",
//                      "bits_middle", "bits_outlier", "segment_len"},
//     "provenance": {"num_runs", "source_trace_digest"},
//     "thresholds": [{"layer", "kind", "t_lo_outer", "t_lo_inner",
//                     "t_hi_inner", "t_hi_outer"}, ...]
//   }
//
// Thresholds are sorted by (layer, kind) and printed with round-trip precision,
// so writing the same profile twice gives byte-identical files.

#pragma once

#include <filesystem>
#include <string>

#include "oaken/profiler.hpp"

namespace oaken {

std::string profile_to_text(const ThresholdProfile& profile);
ThresholdProfile profile_from_text(const std::string& text);

void save_profile(const ThresholdProfile& profile, const std::filesystem::path& path);
ThresholdProfile load_profile(const std::filesystem::path& path);

}  // namespace oaken

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oaken/kv_model.hpp"

namespace oaken {

/// Parameters of a synthetic KV trace with channel-concentrated outliers.
///
/// Each element is base_mean + std_l * z with z ~ N(0, 1) and
/// std_l = base_std * (1 + layer_std_growth * layer). Elements on
/// `outlier_channels` (indices into the vector) are scaled by
/// `outlier_multiplier`; every other element is scaled by the same
/// multiplier with probability `exception_rate`.
struct SyntheticSpec {
  std::string model_name = "synthetic";
  std::uint32_t num_layers = 1;
  std::uint32_t num_kv_heads = 1;
  std::uint32_t head_dim = 64;
  std::uint32_t num_tokens = 1;
  KindMask kinds = kAllKinds;

  double base_mean = 0.0;
  double base_std = 1.0;
  double layer_std_growth = 0.0;
  std::vector<std::uint32_t> outlier_channels;
  double outlier_multiplier = 10.0;
  double exception_rate = 0.0;

  std::uint32_t vector_len() const { return num_kv_heads * head_dim; }
  void validate() const;
};

/// Deterministic for a fixed (spec, seed). Each (layer, kind) draws from its
/// own generator stream.
KvTrace generate_synthetic_trace(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace oaken

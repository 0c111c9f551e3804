// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/synthetic.hpp"

#include <cmath>
#include <random>

#include "oaken/error.hpp"

namespace oaken {

void SyntheticSpec::validate() const {
  if (num_layers == 0 || num_kv_heads == 0 || head_dim == 0) {
    throw ConfigError("synthetic spec needs non-zero layers, heads and head_dim");
  }
  if (num_tokens == 0) throw ConfigError("synthetic spec needs at least one token");
  if (kinds == 0 || (kinds & ~kAllKinds) != 0) throw ConfigError("synthetic spec has invalid kinds");
  if (!(base_std >= 0.0) || !std::isfinite(base_mean)) throw ConfigError("base_std must be >= 0");
  if (!(layer_std_growth >= 0.0)) throw ConfigError("layer_std_growth must be >= 0");
  if (!(outlier_multiplier >= 0.0)) throw ConfigError("outlier_multiplier must be >= 0");
  if (!(exception_rate >= 0.0 && exception_rate <= 1.0)) {
    throw ConfigError("exception_rate must lie in [0, 1]");
  }
  for (auto c : outlier_channels) {
    if (c >= vector_len()) {
      throw ConfigError("outlier channel " + std::to_string(c) + " outside vector_len " +
                        std::to_string(vector_len()));
    }
  }
}

KvTrace generate_synthetic_trace(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  TraceMeta meta{spec.model_name, spec.num_layers, spec.vector_len(), spec.num_kv_heads,
                 spec.head_dim};
  const std::size_t len = spec.vector_len();
  std::vector<bool> is_outlier_channel(len, false);
  for (auto c : spec.outlier_channels) is_outlier_channel[c] = true;

  std::vector<KvKind> kinds;
  if (spec.kinds & kKeyBit) kinds.push_back(KvKind::Key);
  if (spec.kinds & kValueBit) kinds.push_back(KvKind::Value);

  std::vector<float> payload;
  payload.reserve(static_cast<std::size_t>(spec.num_layers) * kinds.size() * spec.num_tokens * len);
  for (std::uint32_t layer = 0; layer < spec.num_layers; ++layer) {
    const double layer_std = spec.base_std * (1.0 + spec.layer_std_growth * layer);
    for (KvKind kind : kinds) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        layer, static_cast<std::uint32_t>(kind)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::bernoulli_distribution exception(spec.exception_rate);
      for (std::uint32_t t = 0; t < spec.num_tokens; ++t) {
        for (std::size_t i = 0; i < len; ++i) {
          double v = spec.base_mean + layer_std * normal(rng);
          if (is_outlier_channel[i] || (spec.exception_rate > 0.0 && exception(rng))) {
            v *= spec.outlier_multiplier;
          }
          payload.push_back(static_cast<float>(v));
        }
      }
    }
  }
  return KvTrace(std::move(meta), spec.num_tokens, spec.kinds, std::move(payload));
}

}  // namespace oaken

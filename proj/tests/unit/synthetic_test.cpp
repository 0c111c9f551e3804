// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "oaken/error.hpp"
#include "oaken/synthetic.hpp"

namespace oaken {
namespace {

TEST(Synthetic, DegenerateSpecIsAllZeros) {
  SyntheticSpec s;
  s.head_dim = 64;
  s.base_std = 0.0;
  s.kinds = kKeyBit;
  const KvTrace t = generate_synthetic_trace(s, 7);
  for (float v : t.payload()) EXPECT_EQ(v, 0.0f);
}

TEST(Synthetic, OutlierChannelsDominate) {
  SyntheticSpec s;
  s.head_dim = 64;
  s.num_tokens = 1000;
  s.kinds = kKeyBit;
  s.outlier_channels = {3, 17};
  s.outlier_multiplier = 10.0;
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const KvTrace t = generate_synthetic_trace(s, seed);
    double on = 0.0, off = 0.0;
    std::size_t n_on = 0, n_off = 0;
    for (std::uint32_t tok = 0; tok < t.num_tokens(); ++tok) {
      const auto v = t.vector(0, KvKind::Key, tok);
      for (std::size_t c = 0; c < v.size(); ++c) {
        if (c == 3 || c == 17) {
          on += std::fabs(v[c]);
          ++n_on;
        } else {
          off += std::fabs(v[c]);
          ++n_off;
        }
      }
    }
    EXPECT_GE(on / n_on, 5.0 * (off / n_off)) << "seed " << seed;
  }
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticSpec s;
  s.num_layers = 3;
  s.num_tokens = 16;
  s.exception_rate = 0.01;
  s.outlier_channels = {5};
  EXPECT_EQ(generate_synthetic_trace(s, 42), generate_synthetic_trace(s, 42));
  EXPECT_NE(generate_synthetic_trace(s, 42).payload()[0], generate_synthetic_trace(s, 43).payload()[0]);
}

TEST(Synthetic, LayerRangesGrow) {
  SyntheticSpec s;
  s.num_layers = 4;
  s.num_tokens = 200;
  s.kinds = kKeyBit;
  s.layer_std_growth = 0.5;
  const KvTrace t = generate_synthetic_trace(s, 3);
  auto spread = [&](std::uint32_t layer) {
    double acc = 0.0;
    for (float v : t.layer_values(layer, KvKind::Key)) acc += v * v;
    return std::sqrt(acc / t.layer_values(layer, KvKind::Key).size());
  };
  EXPECT_LT(spread(0) * 1.5, spread(3));
}

TEST(Synthetic, ExceptionsHitOffChannelElements) {
  SyntheticSpec s;
  s.num_tokens = 500;
  s.kinds = kKeyBit;
  s.exception_rate = 0.02;
  const KvTrace t = generate_synthetic_trace(s, 5);
  std::size_t big = 0;
  for (float v : t.payload()) big += std::fabs(v) > 5.0f ? 1 : 0;
  const double frac = static_cast<double>(big) / t.payload().size();
  EXPECT_GT(frac, 0.01);
  EXPECT_LT(frac, 0.03);
}

TEST(Synthetic, InvalidSpecs) {
  SyntheticSpec s;
  s.head_dim = 0;
  EXPECT_THROW(generate_synthetic_trace(s, 1), ConfigError);
  s = {};
  s.exception_rate = -0.1;
  EXPECT_THROW(generate_synthetic_trace(s, 1), ConfigError);
  s = {};
  s.outlier_channels = {64};
  EXPECT_THROW(generate_synthetic_trace(s, 1), ConfigError);
  s = {};
  s.num_tokens = 0;
  EXPECT_THROW(generate_synthetic_trace(s, 1), ConfigError);
}

}  // namespace
}  // namespace oaken

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "oaken/error.hpp"
#include "oaken/eval.hpp"
#include "oaken/half.hpp"
#include "oaken/replay.hpp"
#include "oaken/synthetic.hpp"

namespace oaken {
namespace {

KvTrace channel_trace(std::uint64_t seed, std::uint32_t layers = 2) {
  SyntheticSpec s;
  s.num_layers = layers;
  s.num_kv_heads = 2;
  s.head_dim = 64;
  s.num_tokens = 32;
  s.outlier_channels = {3, 70, 101};
  s.exception_rate = 0.01;
  return generate_synthetic_trace(s, seed);
}

TEST(Baselines, Uniform4IsPerTokenMinMax) {
  std::vector<float> v(64);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) / 4.0f;  // [0, 15.75]
  const auto r = reconstruct_uniform4(v);
  const double step = 15.75 / 15.0;
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LE(std::fabs(r.values[i] - v[i]), step / 2 + 1e-6);
  EXPECT_EQ(r.values.front(), 0.0f);
  EXPECT_FLOAT_EQ(r.values.back(), 15.75f);
  EXPECT_EQ(r.stored_bits, 256.0);
}

TEST(Baselines, TopkMixedKeepsOutliersExact) {
  const KvTrace t = channel_trace(1);
  const auto v = t.vector(0, KvKind::Key, 0);
  const auto r = reconstruct_topk_mixed(v, GroupConfig{});
  std::size_t outliers = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (r.outlier[i]) {
      EXPECT_EQ(r.values[i], v[i]);
      ++outliers;
    }
  }
  EXPECT_GT(outliers, 0u);
  const double f = static_cast<double>(outliers) / v.size();
  EXPECT_DOUBLE_EQ(r.stored_bits / v.size(), 4.0 * (1 - f) + 23.0 * f);
}

TEST(Evaluate, RowsPerMethodAndCell) {
  const KvTrace t = channel_trace(2);
  const ThresholdProfile p = profile(t, GroupConfig{}, RunPartition::contiguous(32, 4));
  const ErrorReport r = evaluate(t, p);
  EXPECT_EQ(r.rows.size(), 2u * 2 * 3);
  EXPECT_EQ(r.tokens_checked, 2u * 2 * 32);
  EXPECT_EQ(r.size_mismatches, 0u);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(std::isfinite(row.mse) && std::isfinite(row.sqnr_db) && std::isfinite(row.toy_attention_delta));
    EXPECT_GE(row.outlier_fraction, 0.0);
    EXPECT_LE(row.outlier_fraction, 1.0);
    if (row.method == Method::TopkMixed) EXPECT_EQ(row.max_abs_err_outliers, 0.0);
    if (row.method == Method::Oaken) {
      EXPECT_NEAR(row.effective_bits, 4.0 + 8.0 * row.outlier_fraction, 1e-12);
      EXPECT_NEAR(row.effective_bits_with_scales - row.effective_bits, 96.0 / 128, 1e-12);
      EXPECT_GE(row.outlier_fraction, 0.07);
      EXPECT_LE(row.outlier_fraction, 0.13);
    }
    if (row.method == Method::Uniform4) EXPECT_DOUBLE_EQ(row.effective_bits_with_scales, 4.25);
  }
}

TEST(Evaluate, OakenBeatsUniformOnChannelOutliers) {
  int wins = 0, cells = 0;
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const KvTrace held_out = channel_trace(seed);
    const ThresholdProfile p =
        profile(channel_trace(seed + 1000), GroupConfig{}, RunPartition::contiguous(32, 8));
    const ErrorReport r = evaluate(held_out, p);
    for (std::size_t i = 0; i < r.rows.size(); i += 3) {
      ASSERT_EQ(r.rows[i].method, Method::Oaken);
      ASSERT_EQ(r.rows[i + 1].method, Method::Uniform4);
      wins += r.rows[i].mse <= r.rows[i + 1].mse;
      ++cells;
    }
  }
  EXPECT_GE(wins * 100, cells * 95);
}

TEST(Evaluate, MismatchedProfileIsConfigError) {
  const KvTrace t = channel_trace(3, 2);
  const ThresholdProfile small = profile(channel_trace(3, 1), GroupConfig{}, RunPartition::contiguous(32, 1));
  EXPECT_THROW(evaluate(t, small), ConfigError);
  const ThresholdProfile big = profile(channel_trace(3, 3), GroupConfig{}, RunPartition::contiguous(32, 1));
  EXPECT_THROW(evaluate(t, big), ConfigError);
}

TEST(Evaluate, DeterministicReports) {
  const KvTrace t = channel_trace(4);
  const ThresholdProfile p = profile(t, GroupConfig{}, RunPartition::contiguous(32, 2));
  EXPECT_EQ(report_to_csv(evaluate(t, p)), report_to_csv(evaluate(t, p)));
  const std::string csv = report_to_csv(evaluate(t, p));
  EXPECT_EQ(csv.substr(0, csv.find(',')), "method");
  EXPECT_NE(report_to_text(evaluate(t, p)).find("\"mixed\": 23"), std::string::npos);
}

TEST(ToyAttention, IdentityAndSensitivity) {
  std::vector<float> k(128 * 512);
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = std::sin(0.37 * i);
  EXPECT_EQ(toy_attention_delta(k, k, 512, 128, 1), 0.0);
  auto noisy = k;
  for (std::size_t i = 0; i < noisy.size(); i += 7) noisy[i] += 0.5f;
  const double d = toy_attention_delta(k, noisy, 512, 128, 1);
  EXPECT_GT(d, 0.0);
  EXPECT_LT(d, 1.0);
  EXPECT_THROW(toy_attention_delta(k, k, 512, 200, 1), ContractError);
}

TEST(Sqnr, Floors) {
  EXPECT_DOUBLE_EQ(sqnr_db(1.0, 0.01), 20.0);
  EXPECT_TRUE(std::isfinite(sqnr_db(1.0, 0.0)));
  EXPECT_TRUE(std::isfinite(sqnr_db(0.0, 0.0)));
}

TEST(Replay, ContiguousReadsAreBurstEfficient) {
  auto w = workload_preset("llama2-7b");
  w.num_kv_heads = 4;
  w.num_heads = 4;
  w.hidden_dim = 4 * w.head_dim;
  ReplayConfig rc;
  rc.tokens = 128;
  const ReplayResult r = replay_generation_schedule(w, MemoryConfig{}, rc, GroupConfig{});
  EXPECT_EQ(r.streams, 2u * 1 * 2 * 4);
  EXPECT_EQ(r.tokens_written, r.streams * 128);
  EXPECT_GE(r.read_stats.burst_efficiency, 0.9);
  EXPECT_GE(r.stats.burst_efficiency, 0.9);
  EXPECT_EQ(replay_generation_schedule(w, MemoryConfig{}, rc, GroupConfig{}).stats.to_text(), r.stats.to_text());
}

}  // namespace
}  // namespace oaken

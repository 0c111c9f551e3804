// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "oaken/error.hpp"
#include "oaken/eval.hpp"
#include "oaken/half.hpp"
#include "oaken/property_suite.hpp"
#include "oaken/quant.hpp"

namespace oaken {
namespace {

const ThresholdQuad kQuad{-6.0f, -0.25f, 0.25f, 7.5f};
const std::vector<float> kTen = {-10, -2, -1, -0.2f, 0.1f, 0.3f, 1, 2, 3, 12};

TEST(Decompose, BoundaryPredicates) {
  EXPECT_EQ(classify(0.25f, kQuad), GroupLabel::Inner);
  EXPECT_EQ(classify(-0.25f, kQuad), GroupLabel::Inner);
  EXPECT_EQ(classify(7.5f, kQuad), GroupLabel::MiddleHigh);
  EXPECT_EQ(classify(-6.0f, kQuad), GroupLabel::MiddleLow);
  EXPECT_EQ(classify(std::nextafter(7.5f, 8.0f), kQuad), GroupLabel::OuterHigh);
  EXPECT_EQ(classify(12.0f, kQuad), GroupLabel::OuterHigh);
  EXPECT_EQ(classify(-2.0f, kQuad), GroupLabel::MiddleLow);
  EXPECT_EQ(classify(0.1f, kQuad), GroupLabel::Inner);
  EXPECT_EQ(classify(-10.0f, kQuad), GroupLabel::OuterLow);
}

TEST(Shift, ExamplesAndInverse) {
  EXPECT_DOUBLE_EQ(shift(12.0f, GroupLabel::OuterHigh, kQuad), 4.5);
  EXPECT_DOUBLE_EQ(shift(0.1f, GroupLabel::Inner, kQuad), static_cast<double>(0.1f));
  EXPECT_DOUBLE_EQ(shift(-2.0f, GroupLabel::MiddleLow, kQuad), -1.75);
  EXPECT_GT(shift(7.0f, GroupLabel::MiddleHigh, kQuad), 0.0);
  EXPECT_LT(shift(-7.0f, GroupLabel::OuterLow, kQuad), 0.0);
  EXPECT_THROW(shift(0.1f, GroupLabel::MiddleHigh, kQuad), ContractError);
  for (float x : kTen) {
    const GroupLabel l = classify(x, kQuad);
    EXPECT_EQ(unshift(shift(x, l, kQuad), l, kQuad), static_cast<double>(x));
  }
}

TEST(QuantizeToken, WorkedExample) {
  const QuantizedToken q = quantize_token({kTen, {}}, kQuad, GroupConfig{});
  EXPECT_EQ(q.middle.min, -1.75f);
  EXPECT_EQ(q.middle.max, 2.75f);
  EXPECT_FLOAT_EQ(q.middle.sigma, 15.0f / 4.5f);
  EXPECT_EQ(q.codes[5], 6);  // 0.3
  EXPECT_EQ(q.codes[9], 15);  // 12
  EXPECT_EQ(q.signs[9], 1);
  EXPECT_EQ(q.codes[0], 13);  // -10
  EXPECT_EQ(q.signs[0], -1);
  EXPECT_EQ(q.codes[3], 15);  // -0.2
  EXPECT_EQ(q.signs[3], -1);
  EXPECT_EQ(q.outer.max, 4.5f);
}

TEST(QuantizeToken, AgreesWithRealArithmeticOracle) {
  // Where the stored min/max are exact, codes must equal the real-arithmetic oracle.
  const oracle::Quad oq{-6.0, -0.25, 0.25, 7.5};
  std::vector<double> xs(kTen.begin(), kTen.end());
  xs[3] = -0.25;  // make the inner range half-exact
  std::vector<float> xf(xs.begin(), xs.end());
  const auto o = oracle::quantize(xs, oq);
  const QuantizedToken q = quantize_token({xf, {}}, kQuad, GroupConfig{});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_EQ(q.codes[i], o.code[i]) << i;
    EXPECT_EQ(q.signs[i], o.sign[i]) << i;
  }
}

TEST(DequantizeToken, WorkedExampleValues) {
  const QuantizedToken q = quantize_token({kTen, {}}, kQuad, GroupConfig{});
  const auto x = dequantize_token(q, kQuad);
  EXPECT_FLOAT_EQ(x[5], 0.3f);
  EXPECT_NEAR(x[0], -9.9, 1e-6);
  EXPECT_LE(std::fabs(x[0] - (-10.0f)), 0.15f);
  for (std::size_t i = 0; i < kTen.size(); ++i) {
    const Group g = group_of(q.labels[i]);
    const GroupScale& s = g == Group::Middle ? q.middle : g == Group::Inner ? q.inner : q.outer;
    EXPECT_LE(std::fabs(x[i] - kTen[i]), 0.5 / s.sigma + half_ulp(kTen[i])) << i;
  }
}

TEST(QuantizeToken, SingleGroupAndConstantInputs) {
  const std::vector<float> small = {0.1f, -0.2f, 0.0f, 0.25f};
  const QuantizedToken q = quantize_token({small, {}}, kQuad, GroupConfig{});
  for (auto l : q.labels) EXPECT_EQ(l, GroupLabel::Inner);
  EXPECT_TRUE(q.middle.degenerate());
  EXPECT_TRUE(q.outer.degenerate());

  const std::vector<float> constant(64, 2.0f);
  const QuantizedToken c = quantize_token({constant, {}}, kQuad, GroupConfig{});
  EXPECT_TRUE(c.middle.degenerate());
  for (auto code : c.codes) EXPECT_EQ(code, 0);
  for (float v : dequantize_token(c, kQuad)) EXPECT_EQ(v, 2.0f);

  const std::vector<float> neg(64, -3.0f);
  for (float v : dequantize_token(quantize_token({neg, {}}, kQuad, GroupConfig{}), kQuad)) {
    EXPECT_EQ(v, -3.0f);
  }
}

TEST(QuantizeToken, MiddleNeverFlipsSide) {
  // Residuals just below zero on the low side stress the decoder's side rule.
  ThresholdQuad quad{-4.0f, -0.5f, 0.5f, 4.0f};
  std::vector<float> v = {-0.5009765625f, 3.9f, -3.9f, 0.75f, 0.5009765625f, -0.51f, 1.0f, -1.0f};
  const QuantizedToken q = quantize_token({v, {}}, quad, GroupConfig{});
  const auto x = dequantize_token(q, quad);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(classify(x[i], quad) == GroupLabel::Inner, false) << i;
    const bool low = q.labels[i] == GroupLabel::MiddleLow;
    EXPECT_EQ(x[i] < 0.0f, low) << i;
    EXPECT_LE(std::fabs(x[i] - v[i]), 0.5 * (q.middle.max - q.middle.min) / 15.0 + half_ulp(v[i]));
  }
}

TEST(QuantizeToken, MonotoneWithinGroupSide) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = fuzz_vector(rng(), 256);
    const ThresholdQuad quad = fuzz_quad(rng(), v, GroupConfig{});
    const QuantizedToken q = quantize_token({v, {}}, quad, GroupConfig{});
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = 0; j < v.size(); j += 17) {
        if (q.labels[i] != q.labels[j] || v[i] > v[j]) continue;
        if (group_of(q.labels[i]) == Group::Middle) {
          ASSERT_LE(q.codes[i], q.codes[j]);
        } else if (std::fabs(shift(v[i], q.labels[i], quad)) <= std::fabs(shift(v[j], q.labels[j], quad)) &&
                   q.signs[i] == q.signs[j]) {
          ASSERT_LE(q.codes[i], q.codes[j]);
        }
      }
    }
  }
}

TEST(QuantizeToken, RoundTripBoundFuzz) {
  std::uint64_t checks = 0;
  for (std::uint64_t i = 0; i < 3000; ++i) {
    ASSERT_EQ(check_round_trip(case_seed(77, Property::RoundTrip, i), GroupConfig{}, checks), "");
    ASSERT_EQ(check_partition(case_seed(77, Property::Partition, i), GroupConfig{}, checks), "");
  }
  EXPECT_GT(checks, 0u);
}

TEST(QuantizeToken, BeatsUniformOnHeavyTails) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::lognormal_distribution<double> tail(1.5, 0.5);
  std::bernoulli_distribution is_tail(0.03);
  int wins = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    std::vector<float> v(256);
    for (auto& x : v) {
      const double s = is_tail(rng) ? tail(rng) * (normal(rng) < 0 ? -1 : 1) * 3.0 : normal(rng);
      x = round_to_half(static_cast<float>(s));
    }
    const GroupConfig g;
    const ThresholdQuad quad = extract_quad(v, g);
    const auto oaken = reconstruct_oaken({v, {}}, quad, g).values;
    const auto uni = reconstruct_uniform4(v).values;
    double e_o = 0, e_u = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      e_o += (oaken[i] - v[i]) * (oaken[i] - v[i]);
      e_u += (uni[i] - v[i]) * (uni[i] - v[i]);
    }
    wins += e_o <= e_u;
  }
  EXPECT_GE(wins, trials * 95 / 100);
}

TEST(QuantizedToken, ValidateCatchesInconsistency) {
  QuantizedToken q = quantize_token({kTen, {}}, kQuad, GroupConfig{});
  EXPECT_NO_THROW(q.validate());
  auto bad = q;
  bad.signs[1] = 1;  // middle element with a sign
  EXPECT_THROW(bad.validate(), ContractError);
  bad = q;
  bad.codes[0] = 16;
  EXPECT_THROW(bad.validate(), ContractError);
  bad = q;
  bad.signs[9] = -1;  // outer-high must be positive
  EXPECT_THROW(bad.validate(), ContractError);
}

TEST(GroupScale, SigmaAndSentinel) {
  EXPECT_FLOAT_EQ(GroupScale::from_range(-1.75f, 2.75f).sigma, 15.0f / 4.5f);
  EXPECT_TRUE(GroupScale::from_range(2.0f, 2.0f).degenerate());
  EXPECT_EQ(middle_residual(9, GroupScale::from_range(2.0f, 2.0f)), 2.0);
}

}  // namespace
}  // namespace oaken

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations used by the tests. They work in
// plain double arithmetic with full sorts and explicit bit twiddling and do
// not call into the library code they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace oracle {

struct Quad {
  double lo_outer, lo_inner, hi_inner, hi_outer;
};

inline std::size_t cut_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5 + 1e-9));
}

// Midpoint of the k-th and (k+1)-th smallest (1-based) of a sorted copy.
inline double midpoint_cut(std::vector<double> v, std::size_t k) {
  std::sort(v.begin(), v.end());
  if (k == 0) {
    return std::nextafter(static_cast<float>(v.front()), -std::numeric_limits<float>::infinity());
  }
  if (k >= v.size()) {
    return std::nextafter(static_cast<float>(v.back()), std::numeric_limits<float>::infinity());
  }
  return static_cast<float>((v[k - 1] + v[k]) / 2.0);
}

inline Quad quad(const std::vector<float>& x, double r_outer, double r_inner) {
  std::vector<double> v(x.begin(), x.end());
  std::vector<double> mag(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mag[i] = std::fabs(static_cast<double>(x[i]));
  const std::size_t tail = cut_count(r_outer / 2.0, x.size());
  const std::size_t inner = cut_count(r_inner, x.size());
  Quad q;
  q.lo_outer = midpoint_cut(v, tail);
  q.hi_outer = midpoint_cut(v, x.size() - tail);
  q.hi_inner = std::max(0.0, midpoint_cut(mag, inner));
  q.lo_inner = -q.hi_inner;
  return q;
}

enum Group { kOuter, kMiddle, kInner };

inline Group group(double x, const Quad& q) {
  if (x < q.lo_outer || x > q.hi_outer) return kOuter;
  if (x >= q.lo_inner && x <= q.hi_inner) return kInner;
  return kMiddle;
}

// Group quantization with an exact real-valued scale: returns the 4-bit code and sign
// (+1/-1 for outliers, 0 for middle) of every element.
struct Codes {
  std::vector<int> code;
  std::vector<int> sign;
  double mid_min = 0, mid_max = 0, inner_max = 0, outer_max = 0;
};

inline double shifted(double x, const Quad& q) {
  switch (group(x, q)) {
    case kOuter: return x > q.hi_outer ? x - q.hi_outer : x - q.lo_outer;
    case kMiddle: return x > q.hi_inner ? x - q.hi_inner : x - q.lo_inner;
    case kInner: return x;
  }
  return x;
}

inline Codes quantize(const std::vector<double>& x, const Quad& q) {
  Codes c;
  c.code.resize(x.size());
  c.sign.resize(x.size());
  c.mid_min = std::numeric_limits<double>::infinity();
  c.mid_max = -std::numeric_limits<double>::infinity();
  for (double v : x) {
    const double r = shifted(v, q);
    switch (group(v, q)) {
      case kMiddle: c.mid_min = std::min(c.mid_min, r); c.mid_max = std::max(c.mid_max, r); break;
      case kInner: c.inner_max = std::max(c.inner_max, std::fabs(r)); break;
      case kOuter: c.outer_max = std::max(c.outer_max, std::fabs(r)); break;
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = shifted(x[i], q);
    const Group g = group(x[i], q);
    if (g == kMiddle) {
      const double sigma = 15.0 / (c.mid_max - c.mid_min);
      c.code[i] = static_cast<int>(std::round((r - c.mid_min) * sigma));
      c.sign[i] = 0;
    } else {
      const double range = g == kInner ? c.inner_max : c.outer_max;
      c.code[i] = range > 0 ? static_cast<int>(std::round(std::fabs(r) * 15.0 / range)) : 0;
      c.sign[i] = r < 0 ? -1 : 1;
    }
  }
  return c;
}

// Byte stream of the fused dense block: nibble i of codes at byte i/2, low
// nibble first.
inline std::vector<std::uint8_t> pack_nibbles(const std::vector<int>& codes) {
  std::vector<std::uint8_t> out(codes.size() / 2, 0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    out[i / 2] |= static_cast<std::uint8_t>((codes[i] & 0xF) << ((i % 2) * 4));
  }
  return out;
}

inline std::uint8_t coo_byte(unsigned index, bool outer, bool negative) {
  return static_cast<std::uint8_t>((index << 2) | (outer ? 2u : 0u) | (negative ? 1u : 0u));
}

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// First generation step t (resident t + 1 tokens) at which weights plus KV
// exceed capacity, or -1 when everything fits.
inline long long oom_token(double capacity, double weights, double kv_bytes_per_token,
                           long long seq_input, long long seq_output) {
  const double room = (capacity - weights) / kv_bytes_per_token;
  long long t = static_cast<long long>(std::floor(room));
  t = std::max(t, seq_input - 1);
  return t <= seq_input + seq_output - 1 ? t : -1;
}

// Largest batch that fits at total length S: weights + batch*per_request*S <= capacity.
inline long long max_batch(double capacity, double weights, double kv_bytes_per_token_per_request,
                           long long total_tokens) {
  return static_cast<long long>(
      std::floor((capacity - weights) / (kv_bytes_per_token_per_request * total_tokens)));
}

}  // namespace oracle

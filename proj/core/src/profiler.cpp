// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/profiler.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "oaken/digest.hpp"
#include "oaken/error.hpp"

namespace oaken {

bool ThresholdQuad::is_ordered() const {
  for (float t : {t_lo_outer, t_lo_inner, t_hi_inner, t_hi_outer}) {
    if (!std::isfinite(t)) return false;
  }
  return t_lo_outer <= t_lo_inner && t_lo_inner <= 0.0f && 0.0f <= t_hi_inner &&
         t_hi_inner <= t_hi_outer;
}

void ThresholdQuad::validate() const {
  if (!is_ordered()) {
    throw ContractError("threshold quad (" + std::to_string(t_lo_outer) + ", " +
                        std::to_string(t_lo_inner) + ", " + std::to_string(t_hi_inner) + ", " +
                        std::to_string(t_hi_outer) + ") is not ordered");
  }
}

namespace {

std::size_t round_count(double ratio, std::size_t n) {
  // The epsilon absorbs representation error in ratios such as 0.15.
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5 + 1e-9));
}

}  // namespace

GroupCounts group_counts(std::size_t n, const GroupConfig& config) {
  GroupCounts c;
  c.outer_per_tail = round_count(config.ratio_outer / 2.0, n);
  c.inner = round_count(config.ratio_inner, n);
  return c;
}

namespace {

// Order-preserving map from float to unsigned; both zeros map to +0.
std::uint32_t sortable(float x) {
  const auto u = std::bit_cast<std::uint32_t>(x + 0.0f);
  return (u & 0x80000000u) ? ~u : (u | 0x80000000u);
}

float from_sortable(std::uint32_t key) {
  return std::bit_cast<float>((key & 0x80000000u) ? (key & 0x7fffffffu) : ~key);
}

// k-th smallest key by one histogram pass over the top bits, then a
// selection inside the single bucket that holds k.
template <class Key>
class RadixSelect {
 public:
  explicit RadixSelect(std::span<const Key> keys) : keys_(keys) {
    for (Key key : keys_) ++hist_[key >> kShift];
  }

  Key kth(std::size_t k) {
    std::size_t before = 0;
    std::size_t b = 0;
    while (before + hist_[b] <= k) before += hist_[b++];
    if (b != cached_) {
      bucket_.clear();
      bucket_.reserve(hist_[b]);
      for (Key key : keys_) {
        if ((key >> kShift) == b) bucket_.push_back(key);
      }
      cached_ = b;
    }
    auto nth = bucket_.begin() + static_cast<std::ptrdiff_t>(k - before);
    std::nth_element(bucket_.begin(), nth, bucket_.end());
    return *nth;
  }

 private:
  static constexpr int kBits = 12;
  static constexpr int kShift = static_cast<int>(sizeof(Key)) * 8 - kBits;
  std::span<const Key> keys_;
  std::array<std::uint32_t, std::size_t{1} << kBits> hist_{};
  std::vector<Key> bucket_;
  std::size_t cached_ = ~std::size_t{0};
};

float cut_from_keys(std::span<const std::uint32_t> keys, RadixSelect<std::uint32_t>& select,
                    std::size_t k) {
  const std::size_t n = keys.size();
  if (k == 0) {
    const float lo = from_sortable(*std::min_element(keys.begin(), keys.end()));
    return std::nextafter(lo, -std::numeric_limits<float>::infinity());
  }
  if (k >= n) {
    const float hi = from_sortable(*std::max_element(keys.begin(), keys.end()));
    return std::nextafter(hi, std::numeric_limits<float>::infinity());
  }
  const float lower = from_sortable(select.kth(k - 1));
  const float upper = from_sortable(select.kth(k));
  return static_cast<float>((static_cast<double>(lower) + static_cast<double>(upper)) / 2.0);
}

}  // namespace

float order_statistic_cut(std::span<float> values, std::size_t k) {
  if (values.empty()) throw ProfilingError("order statistic of an empty sample");
  std::vector<std::uint32_t> keys(values.size());
  std::transform(values.begin(), values.end(), keys.begin(), sortable);
  RadixSelect<std::uint32_t> select(keys);
  return cut_from_keys(keys, select, k);
}

ThresholdQuad extract_quad(std::span<const float> values, const GroupConfig& config) {
  config.validate();
  const std::size_t n = values.size();
  double min_ratio = 1.0;
  for (double r : {config.ratio_outer, config.ratio_inner}) {
    if (r > 0.0) min_ratio = std::min(min_ratio, r);
  }
  if (static_cast<double>(n) * min_ratio < 2.0 - 1e-9) {
    throw ProfilingError("too few elements for threshold extraction: have " + std::to_string(n) +
                         ", need at least " +
                         std::to_string(static_cast<std::size_t>(std::ceil(2.0 / min_ratio - 1e-9))));
  }
  for (float v : values) {
    if (!std::isfinite(v)) throw ProfilingError("non-finite value in profiling sample");
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  if (*lo_it == *hi_it) {
    throw ProfilingError("degenerate distribution: all " + std::to_string(n) +
                         " values equal " + std::to_string(*lo_it));
  }

  const GroupCounts counts = group_counts(n, config);
  std::vector<std::uint32_t> keys(n);
  std::transform(values.begin(), values.end(), keys.begin(), sortable);
  ThresholdQuad quad;
  {
    RadixSelect<std::uint32_t> select(keys);
    quad.t_lo_outer = cut_from_keys(keys, select, counts.outer_per_tail);
    quad.t_hi_outer = cut_from_keys(keys, select, n - counts.outer_per_tail);
  }
  std::transform(values.begin(), values.end(), keys.begin(),
                 [](float v) { return sortable(std::fabs(v)); });
  RadixSelect<std::uint32_t> select(keys);
  quad.t_hi_inner = std::max(0.0f, cut_from_keys(keys, select, counts.inner));
  quad.t_lo_inner = -quad.t_hi_inner;

  if (!quad.is_ordered()) {
    throw ProfilingError("degenerate distribution: inner band [" + std::to_string(quad.t_lo_inner) +
                         ", " + std::to_string(quad.t_hi_inner) +
                         "] does not nest inside outer cuts [" + std::to_string(quad.t_lo_outer) +
                         ", " + std::to_string(quad.t_hi_outer) + "]");
  }
  return quad;
}

RunPartition RunPartition::contiguous(std::uint32_t num_tokens, std::uint32_t num_runs) {
  if (num_runs == 0) throw ConfigError("run partition needs at least one run");
  if (num_runs > num_tokens) {
    throw ConfigError("cannot split " + std::to_string(num_tokens) + " tokens into " +
                      std::to_string(num_runs) + " runs");
  }
  RunPartition p;
  p.runs.resize(num_runs);
  for (std::uint32_t r = 0; r < num_runs; ++r) {
    const auto begin = static_cast<std::uint32_t>(static_cast<std::uint64_t>(num_tokens) * r / num_runs);
    const auto end = static_cast<std::uint32_t>(static_cast<std::uint64_t>(num_tokens) * (r + 1) / num_runs);
    p.runs[r].resize(end - begin);
    std::iota(p.runs[r].begin(), p.runs[r].end(), begin);
  }
  return p;
}

void RunPartition::validate(std::uint32_t num_tokens) const {
  if (runs.empty()) throw ConfigError("run partition needs at least one run");
  std::vector<bool> seen(num_tokens, false);
  std::size_t total = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].empty()) throw ConfigError("run " + std::to_string(r) + " is empty");
    for (auto t : runs[r]) {
      if (t >= num_tokens) throw ConfigError("run " + std::to_string(r) + " names token " + std::to_string(t) + " outside the trace");
      if (seen[t]) throw ConfigError("token " + std::to_string(t) + " appears in more than one run");
      seen[t] = true;
      ++total;
    }
  }
  if (total != num_tokens) {
    throw ConfigError("run partition covers " + std::to_string(total) + " of " +
                      std::to_string(num_tokens) + " tokens");
  }
}

const ThresholdQuad& ThresholdProfile::at(std::uint32_t layer, KvKind kind) const {
  auto it = quads.find({layer, kind});
  if (it == quads.end()) {
    throw LookupError("profile has no thresholds for layer " + std::to_string(layer) + " " +
                      std::string(to_string(kind)));
  }
  return it->second;
}

ThresholdProfile profile(const KvTrace& trace, const GroupConfig& config,
                         const RunPartition& runs) {
  config.validate();
  if (trace.num_tokens() == 0) throw ConfigError("cannot profile an empty trace");
  runs.validate(trace.num_tokens());

  ThresholdProfile result;
  result.provenance.num_runs = static_cast<std::uint32_t>(runs.runs.size());
  result.provenance.group_config = config;
  result.provenance.source_trace_digest = trace_digest(trace);

  const std::size_t len = trace.vector_len();
  std::vector<float> sample;
  for (std::uint32_t layer = 0; layer < trace.meta().num_layers; ++layer) {
    for (KvKind kind : trace.kinds()) {
      std::array<double, 4> sum{};
      for (std::size_t r = 0; r < runs.runs.size(); ++r) {
        sample.clear();
        sample.reserve(runs.runs[r].size() * len);
        for (auto t : runs.runs[r]) {
          auto v = trace.vector(layer, kind, t);
          sample.insert(sample.end(), v.begin(), v.end());
        }
        ThresholdQuad q;
        try {
          q = extract_quad(sample, config);
        } catch (const ProfilingError& e) {
          throw ProfilingError("layer " + std::to_string(layer) + " " +
                               std::string(to_string(kind)) + " run " + std::to_string(r) + ": " +
                               e.what());
        }
        sum[0] += q.t_lo_outer;
        sum[1] += q.t_lo_inner;
        sum[2] += q.t_hi_inner;
        sum[3] += q.t_hi_outer;
      }
      const double n = static_cast<double>(runs.runs.size());
      ThresholdQuad mean{static_cast<float>(sum[0] / n), static_cast<float>(sum[1] / n),
                         static_cast<float>(sum[2] / n), static_cast<float>(sum[3] / n)};
      result.quads.emplace(std::make_pair(layer, kind), mean);
    }
  }
  return result;
}

std::vector<GroupLabel> online_topk_grouping(std::span<const float> values,
                                             const GroupConfig& config) {
  config.validate();
  const std::size_t n = values.size();
  const GroupCounts counts = group_counts(n, config);
  if (2 * counts.outer_per_tail > n) throw ContractError("vector too short for outer tails");

  // Keys break ties the same way every time: by value then index for the
  // tails, by magnitude, then value, then index for the inner band.
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = std::uint64_t{sortable(values[i])} << 32 | i;
  std::vector<GroupLabel> labels(n, GroupLabel::MiddleHigh);
  std::vector<bool> is_tail(n, false);
  const std::size_t tail = counts.outer_per_tail;
  if (tail > 0) {
    RadixSelect<std::uint64_t> select(keys);
    const std::uint64_t low_cut = select.kth(tail);
    const std::uint64_t high_cut = select.kth(n - tail);
    for (std::size_t i = 0; i < n; ++i) {
      if (keys[i] < low_cut) {
        labels[i] = GroupLabel::OuterLow;
        is_tail[i] = true;
      } else if (keys[i] >= high_cut) {
        labels[i] = GroupLabel::OuterHigh;
        is_tail[i] = true;
      }
    }
  }
  std::vector<std::uint64_t> magnitude;
  magnitude.reserve(n - 2 * tail);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_tail[i]) continue;
    const float v = values[i] + 0.0f;
    magnitude.push_back(std::uint64_t{std::bit_cast<std::uint32_t>(std::fabs(v))} << 33 |
                        std::uint64_t{v >= 0.0f} << 32 | i);
  }
  const std::size_t inner = std::min(counts.inner, magnitude.size());
  std::uint64_t inner_cut = ~std::uint64_t{0};
  if (inner > 0 && inner < magnitude.size()) {
    RadixSelect<std::uint64_t> select(magnitude);
    inner_cut = select.kth(inner);
  }
  for (std::uint64_t key : magnitude) {
    const std::size_t i = key & 0xffffffffu;
    if (inner > 0 && key < inner_cut) {
      labels[i] = GroupLabel::Inner;
    } else {
      labels[i] = values[i] < 0.0f ? GroupLabel::MiddleLow : GroupLabel::MiddleHigh;
    }
  }
  return labels;
}

}  // namespace oaken

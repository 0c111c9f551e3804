// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/property_suite.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "oaken/error.hpp"
#include "oaken/half.hpp"
#include "oaken/mmu.hpp"
#include "oaken/quant.hpp"

namespace oaken {
namespace {

constexpr std::size_t kMaxMessages = 5;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::size_t fuzz_length(std::mt19937_64& rng, std::size_t seg) {
  return seg * std::uniform_int_distribution<std::size_t>(1, 8)(rng);
}

std::string describe(std::uint64_t seed, const std::string& what) {
  return "seed " + std::to_string(seed) + ": " + what;
}

EncodedToken fuzz_encoded(std::mt19937_64& rng, std::size_t len, TokenOrigin origin,
                          const GroupConfig& config) {
  const auto values = fuzz_vector(rng(), len);
  const ThresholdQuad quad = fuzz_quad(rng(), values, config);
  return encode(quantize_token({values, origin}, quad, config), config);
}

}  // namespace

std::string_view to_string(Property property) {
  switch (property) {
    case Property::Partition: return "partition";
    case Property::RoundTrip: return "round_trip";
    case Property::Bijection: return "bijection";
    case Property::MmuFidelity: return "mmu_fidelity";
    case Property::BurstMath: return "burst_math";
  }
  return "?";
}

Property parse_property(std::string_view text) {
  for (Property p : kAllProperties) {
    if (to_string(p) == text) return p;
  }
  throw ConfigError("unknown property '" + std::string(text) + "'");
}

std::uint64_t case_seed(std::uint64_t suite_seed, Property property, std::uint64_t index) {
  return splitmix(splitmix(suite_seed ^ (static_cast<std::uint64_t>(property) << 56)) + index);
}

std::vector<float> fuzz_vector(std::uint64_t seed, std::size_t len) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double scale = std::pow(10.0, unit(rng) * 3.0 - 2.0);  // 0.01 .. 10
  const double outlier_rate = unit(rng) * 0.2;
  const int shape = std::uniform_int_distribution<int>(0, 9)(rng);
  std::normal_distribution<double> normal(unit(rng) * 0.2 - 0.1, 1.0);
  std::lognormal_distribution<double> tail(1.0, 0.75);
  std::vector<float> v(len);
  for (std::size_t i = 0; i < len; ++i) {
    double x = normal(rng) * scale;
    if (unit(rng) < outlier_rate) x = (unit(rng) < 0.5 ? -1.0 : 1.0) * tail(rng) * scale * 4.0;
    if (shape == 0) x = scale;                                   // constant
    if (shape == 1 && unit(rng) < 0.3) x = 0.0;                  // many zeros
    if (shape == 2) x = std::round(x / scale * 2.0) * scale;     // heavy ties
    if (shape == 3) x = std::fabs(x);                            // one-sided
    v[i] = round_to_half(static_cast<float>(std::clamp(x, -2000.0, 2000.0)));
  }
  return v;
}

ThresholdQuad fuzz_quad(std::uint64_t seed, std::span<const float> values, const GroupConfig& config) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double pick = unit(rng);
  if (pick < 0.7) {
    try {
      return extract_quad(values, config);
    } catch (const ProfilingError&) {
      // fall through to an arbitrary quad
    }
  }
  float peak = 0.0f;
  for (float x : values) peak = std::max(peak, std::fabs(x));
  if (peak == 0.0f) peak = 1.0f;
  float a = static_cast<float>(-unit(rng) * peak);
  float b = static_cast<float>(-unit(rng) * peak);
  float c = static_cast<float>(unit(rng) * peak);
  float d = static_cast<float>(unit(rng) * peak);
  if (pick > 0.95) b = c = 0.0f;  // empty inner band
  ThresholdQuad q{std::min(a, b), std::max(a, b), std::min(c, d), std::max(c, d)};
  // Snap some thresholds onto data values so boundary equality gets exercised.
  if (!values.empty() && unit(rng) < 0.5) {
    const float x = values[std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng)];
    if (x >= q.t_hi_inner && x > 0.0f) q.t_hi_outer = x;
    if (x <= q.t_lo_inner && x < 0.0f) q.t_lo_outer = x;
  }
  return q;
}

std::string check_partition(std::uint64_t seed, const GroupConfig& config, std::uint64_t& checks) {
  std::mt19937_64 rng(seed);
  const auto values = fuzz_vector(rng(), fuzz_length(rng, config.segment_len));
  const ThresholdQuad quad = fuzz_quad(rng(), values, config);
  const auto labels = decompose(values, quad);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float x = values[i];
    const bool outer = x < quad.t_lo_outer || x > quad.t_hi_outer;
    const bool middle = (quad.t_lo_outer <= x && x < quad.t_lo_inner) ||
                        (quad.t_hi_inner < x && x <= quad.t_hi_outer);
    const bool inner = quad.t_lo_inner <= x && x <= quad.t_hi_inner;
    ++checks;
    if (int{outer} + int{middle} + int{inner} != 1) {
      return describe(seed, "element " + std::to_string(i) + " matches " +
                                std::to_string(int{outer} + int{middle} + int{inner}) + " groups");
    }
    const Group expected = outer ? Group::Outer : middle ? Group::Middle : Group::Inner;
    if (group_of(labels[i]) != expected) {
      return describe(seed, "element " + std::to_string(i) + " labelled " +
                                std::string(to_string(labels[i])));
    }
    if (unshift(shift(x, labels[i], quad), labels[i], quad) != static_cast<double>(x)) {
      return describe(seed, "shift/unshift not inverse at element " + std::to_string(i));
    }
  }
  return {};
}

std::string check_round_trip(std::uint64_t seed, const GroupConfig& config, std::uint64_t& checks) {
  std::mt19937_64 rng(seed);
  const auto values = fuzz_vector(rng(), fuzz_length(rng, config.segment_len));
  const ThresholdQuad quad = fuzz_quad(rng(), values, config);
  const QuantizedToken q = quantize_token({values, {}}, quad, config);
  const auto approx = dequantize_token(q, quad);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (q.codes[i] > kCodeLevels) return describe(seed, "code out of range");
    const Group g = group_of(q.labels[i]);
    const GroupScale& s = g == Group::Middle ? q.middle : g == Group::Inner ? q.inner : q.outer;
    const double err = std::fabs(static_cast<double>(approx[i]) - values[i]);
    ++checks;
    if (s.degenerate()) {
      // Constant middle groups are exact; empty-range outliers decode to their threshold.
      if (g == Group::Middle && err != 0.0) {
        return describe(seed, "degenerate middle element " + std::to_string(i) + " not exact");
      }
      continue;
    }
    const double bound = 0.5 * (static_cast<double>(s.max) - s.min) / kCodeLevels +
                         half_ulp(values[i]);
    if (err > bound) {
      std::ostringstream os;
      os << "element " << i << " (" << to_string(q.labels[i]) << ") x=" << values[i]
         << " x_hat=" << approx[i] << " err=" << err << " > bound " << bound;
      return describe(seed, os.str());
    }
  }
  return {};
}

std::string check_bijection(std::uint64_t seed, const GroupConfig& config, bool inject_fault,
                            std::uint64_t& checks) {
  std::mt19937_64 rng(seed);
  const auto values = fuzz_vector(rng(), fuzz_length(rng, config.segment_len));
  const ThresholdQuad quad = fuzz_quad(rng(), values, config);
  const TokenOrigin origin{static_cast<std::uint32_t>(rng() % 32), rng() % 2 ? KvKind::Value : KvKind::Key,
                           static_cast<std::uint32_t>(rng() % 4096)};
  const QuantizedToken q = quantize_token({values, origin}, quad, config);
  EncodedToken e = encode(q, config);
  ++checks;
  if (e.bit_size() != encoded_bits(values.size(), q.num_outliers())) {
    return describe(seed, "encoded size " + std::to_string(e.bit_size()) + " != " +
                              std::to_string(encoded_bits(values.size(), q.num_outliers())));
  }
  if (inject_fault && !e.sparse.empty()) {
    auto& entry = e.sparse[rng() % e.sparse.size()];
    entry = SparseEntry::make(static_cast<std::uint8_t>((entry.index() + 1) % config.segment_len),
                              entry.outer(), entry.negative());
  }
  try {
    const EncodedToken again = assemble_token(e.dense_bytes(), e.sparse_bytes(), e.sparse_counts, e.origin);
    ++checks;
    if (!(again == e)) return describe(seed, "byte reassembly differs");
    const QuantizedToken back = decode(again, config);
    ++checks;
    if (!(back == q)) return describe(seed, "decode(encode(q)) != q");
  } catch (const FormatError& ex) {
    return describe(seed, std::string("decode rejected a valid encoding: ") + ex.what());
  }
  return {};
}

std::string check_mmu_schedule(std::uint64_t seed, const GroupConfig& config,
                               std::uint64_t& checks) {
  std::mt19937_64 rng(seed);
  const std::uint64_t page_sizes[] = {64, 128, 256, 1024, 4096};
  MemoryConfig mc;
  mc.page_size = page_sizes[rng() % 5];
  mc.burst_size = std::uint64_t{16} << (rng() % 3);
  mc.capacity = mc.page_size * 4096;
  Mmu mmu(mc);
  const std::size_t len = config.segment_len * (1 + rng() % 2);

  struct Stream {
    KvKey key;
    std::vector<EncodedToken> tokens;
  };
  std::vector<Stream> streams;
  const std::uint32_t requests = 1 + static_cast<std::uint32_t>(rng() % 3);
  for (std::uint32_t r = 0; r < requests; ++r) {
    for (std::uint32_t layer = 0; layer < 2; ++layer) {
      for (KvKind kind : {KvKind::Key, KvKind::Value}) {
        streams.push_back({{r, layer, kind, static_cast<std::uint32_t>(rng() % 2)}, {}});
      }
    }
  }
  const int ops = 20 + static_cast<int>(rng() % 40);
  for (int op = 0; op < ops; ++op) {
    Stream& s = streams[rng() % streams.size()];
    const auto action = rng() % 10;
    if (action < 6) {
      const TokenOrigin origin{s.key.layer, s.key.kind, static_cast<std::uint32_t>(s.tokens.size())};
      EncodedToken t = fuzz_encoded(rng, len, origin, config);
      mmu.write_token(s.key, t);
      s.tokens.push_back(std::move(t));
    } else if (action < 9) {
      if (s.tokens.empty()) continue;
      const auto n = static_cast<std::uint32_t>(s.tokens.size());
      const std::uint32_t begin = static_cast<std::uint32_t>(rng() % n);
      const std::uint32_t end = begin + 1 + static_cast<std::uint32_t>(rng() % (n - begin));
      const auto got = mmu.read_tokens(s.key, begin, end);
      ++checks;
      if (got.size() != end - begin) return describe(seed, "short read");
      for (std::uint32_t i = begin; i < end; ++i) {
        ++checks;
        if (!(got[i - begin] == s.tokens[i])) {
          return describe(seed, "token " + std::to_string(i) + " of request " +
                                    std::to_string(s.key.request) + " differs after read");
        }
      }
    } else {
      const std::uint32_t request = s.key.request;
      mmu.release_request(request);
      for (auto& other : streams) {
        if (other.key.request == request) other.tokens.clear();
      }
    }
  }
  try {
    mmu.check_invariants();
  } catch (const Error& ex) {
    return describe(seed, std::string("invariant: ") + ex.what());
  }
  for (const auto& s : streams) {
    ++checks;
    if (mmu.tokens_written(s.key) != s.tokens.size()) {
      return describe(seed, "token count drifted for request " + std::to_string(s.key.request));
    }
  }
  return {};
}

std::string check_burst_math(std::uint64_t seed, const GroupConfig& config, std::uint64_t& checks) {
  std::mt19937_64 rng(seed);
  MemoryConfig mc;
  mc.page_size = std::uint64_t{256} << (rng() % 5);
  mc.burst_size = std::uint64_t{16} << (rng() % 3);
  mc.capacity = mc.page_size * 64;
  Mmu mmu(mc);
  const std::size_t len = config.segment_len * (1 + rng() % 2);
  const std::uint64_t token_bytes = len / 2 + kScaleRecordBytes;
  const std::uint64_t fit = mc.page_size / token_bytes;
  if (fit == 0) return {};
  const auto n = static_cast<std::uint32_t>(1 + rng() % fit);
  const KvKey key{0, 0, KvKind::Key, 0};
  for (std::uint32_t t = 0; t < n; ++t) {
    // No zero values and a wide outer band: no outliers, empty sparse stream.
    std::vector<float> values(len);
    for (std::size_t i = 0; i < len; ++i) values[i] = round_to_half(static_cast<float>(i % 7) - 2.5f);
    const ThresholdQuad quad{-100.0f, -0.0f, 0.0f, 100.0f};
    mmu.write_token(key, encode(quantize_token({values, {0, KvKind::Key, t}}, quad, config), config));
  }
  const ReadResult r = mmu.read_sequence(key, 0, n);
  const std::uint64_t bytes = n * token_bytes;
  const std::uint64_t bursts = (bytes + mc.burst_size - 1) / mc.burst_size;
  ++checks;
  if (r.transactions.size() != 1 || r.transactions[0].length != bytes ||
      r.transactions[0].bursts != bursts) {
    std::ostringstream os;
    os << n << " tokens of " << token_bytes << " B: " << r.transactions.size()
       << " transactions, expected 1 with " << bursts << " bursts";
    return describe(seed, os.str());
  }
  return {};
}

bool PropertyReport::passed() const {
  return std::all_of(results.begin(), results.end(),
                     [](const PropertyResult& r) { return r.failures == 0; });
}

std::string PropertyReport::to_text() const {
  nlohmann::ordered_json j;
  j["format"] = "oaken-property-report";
  j["passed"] = passed();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json o{{"property", std::string(to_string(r.property))},
                             {"cases", r.cases},
                             {"failures", r.failures},
                             {"checks", r.checks}};
    o["min_failing_seed"] = r.min_failing_seed ? nlohmann::ordered_json(*r.min_failing_seed) : nullptr;
    o["messages"] = r.messages;
    arr.push_back(std::move(o));
  }
  j["results"] = std::move(arr);
  return j.dump(2) + "\n";
}

PropertyReport run_property_suite(const PropertyConfig& config) {
  config.group.validate();
  PropertyReport report;
  const std::vector<Property> chosen =
      config.only.empty() ? std::vector<Property>(std::begin(kAllProperties), std::end(kAllProperties))
                          : config.only;
  for (Property p : chosen) {
    PropertyResult result;
    result.property = p;
    std::uint64_t cases = 0;
    switch (p) {
      case Property::Partition:
      case Property::RoundTrip:
      case Property::Bijection: cases = config.fuzz_tokens; break;
      case Property::MmuFidelity: cases = config.mmu_schedules; break;
      case Property::BurstMath: cases = config.burst_cases; break;
    }
    if (config.replay_seed) cases = 1;
    for (std::uint64_t i = 0; i < cases; ++i) {
      const std::uint64_t seed = config.replay_seed ? *config.replay_seed : case_seed(config.seed, p, i);
      std::string failure;
      try {
        switch (p) {
          case Property::Partition: failure = check_partition(seed, config.group, result.checks); break;
          case Property::RoundTrip: failure = check_round_trip(seed, config.group, result.checks); break;
          case Property::Bijection:
            failure = check_bijection(seed, config.group, config.inject_sparse_fault, result.checks);
            break;
          case Property::MmuFidelity: failure = check_mmu_schedule(seed, config.group, result.checks); break;
          case Property::BurstMath: failure = check_burst_math(seed, config.group, result.checks); break;
        }
      } catch (const Error& ex) {
        failure = describe(seed, std::string("unexpected error: ") + ex.what());
      }
      ++result.cases;
      if (!failure.empty()) {
        ++result.failures;
        if (!result.min_failing_seed || seed < *result.min_failing_seed) result.min_failing_seed = seed;
        if (result.messages.size() < kMaxMessages) result.messages.push_back(std::move(failure));
      }
    }
    report.results.push_back(std::move(result));
  }
  return report;
}

}  // namespace oaken

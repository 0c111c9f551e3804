// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Seeded property checks over the quantize / encode / MMU pipeline. Every case
// derives its own seed from (suite seed, property, case index), so a failing
// case can be replayed alone with PropertyConfig::replay_seed.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oaken/encoding.hpp"
#include "oaken/kv_model.hpp"
#include "oaken/profiler.hpp"

namespace oaken {

enum class Property : std::uint8_t { Partition, RoundTrip, Bijection, MmuFidelity, BurstMath };
std::string_view to_string(Property property);
Property parse_property(std::string_view text);
inline constexpr Property kAllProperties[] = {Property::Partition, Property::RoundTrip,
                                              Property::Bijection, Property::MmuFidelity,
                                              Property::BurstMath};

struct PropertyConfig {
  std::uint64_t seed = 1;
  std::uint64_t fuzz_tokens = 100000;  // partition, round-trip and bijection cases
  std::uint64_t mmu_schedules = 1000;
  std::uint64_t burst_cases = 1000;
  std::vector<Property> only;            // empty = all
  std::optional<std::uint64_t> replay_seed;  // run exactly one case per property
  bool inject_sparse_fault = false;      // test hook: corrupt one sparse index before decode
  GroupConfig group;
};

struct PropertyResult {
  Property property = Property::Partition;
  std::uint64_t cases = 0;
  std::uint64_t failures = 0;
  std::uint64_t checks = 0;  // element- or byte-level assertions
  std::optional<std::uint64_t> min_failing_seed;
  std::vector<std::string> messages;  // first few failures
};

struct PropertyReport {
  std::vector<PropertyResult> results;
  bool passed() const;
  std::string to_text() const;
};

std::uint64_t case_seed(std::uint64_t suite_seed, Property property, std::uint64_t index);

/// Random half-exact vector of length `len` with heavy tails, ties and zeros.
std::vector<float> fuzz_vector(std::uint64_t seed, std::size_t len);
/// Random ordered quad; mostly extracted from `values`, sometimes arbitrary.
ThresholdQuad fuzz_quad(std::uint64_t seed, std::span<const float> values, const GroupConfig& config);

/// Single-case checks. Each returns an empty string on success, otherwise
/// the violation. `checks` accumulates the number of assertions made.
std::string check_partition(std::uint64_t seed, const GroupConfig& config, std::uint64_t& checks);
std::string check_round_trip(std::uint64_t seed, const GroupConfig& config, std::uint64_t& checks);
std::string check_bijection(std::uint64_t seed, const GroupConfig& config, bool inject_fault,
                            std::uint64_t& checks);
std::string check_mmu_schedule(std::uint64_t seed, const GroupConfig& config,
                               std::uint64_t& checks);
std::string check_burst_math(std::uint64_t seed, const GroupConfig& config, std::uint64_t& checks);

PropertyReport run_property_suite(const PropertyConfig& config);

}  // namespace oaken

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Replays a scaled-down generation schedule through the MMU: prefill writes
// `tokens / 2` tokens per stream, then every generation step reads each
// stream's full history and appends one token. Each stream is one
// (request, layer, kind, head); tokens are encoded per head.

#pragma once

#include <cstdint>

#include "oaken/kv_model.hpp"
#include "oaken/mmu.hpp"
#include "oaken/perf_model.hpp"

namespace oaken {

struct ReplayConfig {
  std::uint32_t requests = 2;
  std::uint32_t layers = 1;
  std::uint32_t tokens = 256;
  std::uint64_t seed = 1;
  void validate() const;
};

struct ReplayResult {
  MmuStats stats;
  MmuStats read_stats;  // generation-step reads only
  std::uint64_t streams = 0;
  std::uint64_t tokens_written = 0;
  std::uint64_t tokens_read = 0;
};

ReplayResult replay_generation_schedule(const WorkloadConfig& workload, const MemoryConfig& memory,
                                        const ReplayConfig& replay, const GroupConfig& group);

}  // namespace oaken

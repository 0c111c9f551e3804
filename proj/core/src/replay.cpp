// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/replay.hpp"

#include <algorithm>
#include <random>

#include "oaken/encoding.hpp"
#include "oaken/error.hpp"
#include "oaken/half.hpp"
#include "oaken/profiler.hpp"
#include "oaken/quant.hpp"

namespace oaken {
namespace {

constexpr std::uint32_t kProfileTokens = 16;

struct StreamSource {
  std::mt19937_64 rng;
  std::normal_distribution<double> normal{0.0, 1.0};
  std::uint32_t head_dim = 0;

  std::vector<float> next() {
    std::vector<float> v(head_dim);
    for (std::uint32_t c = 0; c < head_dim; ++c) {
      double x = normal(rng);
      if (c % 29 == 5) x *= 10.0;  // fixed outlier channels
      v[c] = round_to_half(static_cast<float>(x));
    }
    return v;
  }
};

}  // namespace

void ReplayConfig::validate() const {
  if (requests == 0 || layers == 0 || tokens < 2) {
    throw ConfigError("replay needs at least one request, one layer and two tokens");
  }
}

ReplayResult replay_generation_schedule(const WorkloadConfig& workload, const MemoryConfig& memory,
                                        const ReplayConfig& replay, const GroupConfig& group) {
  workload.validate();
  memory.validate();
  replay.validate();
  group.validate();
  if (workload.head_dim % group.segment_len != 0) {
    throw ConfigError("head_dim " + std::to_string(workload.head_dim) +
                      " must be a multiple of the segment length");
  }
  const std::uint32_t layers = std::min(replay.layers, workload.num_layers);

  struct Stream {
    KvKey key;
    StreamSource source;
    ThresholdQuad quad;
  };
  std::vector<Stream> streams;
  std::uint64_t index = 0;
  for (std::uint32_t r = 0; r < replay.requests; ++r) {
    for (std::uint32_t layer = 0; layer < layers; ++layer) {
      for (KvKind kind : {KvKind::Key, KvKind::Value}) {
        for (std::uint32_t head = 0; head < workload.num_kv_heads; ++head) {
          Stream s{{r, layer, kind, head}, {}, {}};
          s.source.rng.seed(replay.seed * 0x9e3779b97f4a7c15ull + index++);
          s.source.head_dim = workload.head_dim;
          std::vector<float> sample;
          for (std::uint32_t t = 0; t < kProfileTokens; ++t) {
            const auto v = s.source.next();
            sample.insert(sample.end(), v.begin(), v.end());
          }
          s.quad = extract_quad(sample, group);
          streams.push_back(std::move(s));
        }
      }
    }
  }

  Mmu mmu(memory);
  ReplayResult result;
  result.streams = streams.size();
  auto append = [&](Stream& s, std::uint32_t t) {
    const auto values = s.source.next();
    const TokenOrigin origin{s.key.layer, s.key.kind, t};
    mmu.write_token(s.key, encode(quantize_token({values, origin}, s.quad, group), group));
    ++result.tokens_written;
  };
  const std::uint32_t prefill = replay.tokens / 2;
  for (std::uint32_t t = 0; t < prefill; ++t) {
    for (auto& s : streams) append(s, t);
  }
  std::uint64_t read_bytes = 0;
  std::uint64_t read_bursts = 0;
  std::uint64_t read_tx = 0;
  for (std::uint32_t t = prefill; t < replay.tokens; ++t) {
    for (auto& s : streams) {
      const ReadResult r = mmu.read_sequence(s.key, 0, t);
      for (const auto& tx : r.transactions) {
        read_bytes += tx.length;
        read_bursts += tx.bursts;
        ++read_tx;
      }
      result.tokens_read += t;
      append(s, t);
    }
  }
  mmu.check_invariants();
  result.stats = mmu.stats();
  result.read_stats.read_transactions = read_tx;
  result.read_stats.transactions = read_tx;
  result.read_stats.bytes_moved = read_bytes;
  result.read_stats.bursts = read_bursts;
  if (read_bursts > 0) {
    result.read_stats.burst_efficiency =
        static_cast<double>(read_bytes) / (static_cast<double>(read_bursts) * memory.burst_size);
  }
  return result;
}

}  // namespace oaken

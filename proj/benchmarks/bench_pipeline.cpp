// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "oaken/encoding.hpp"
#include "oaken/half.hpp"
#include "oaken/mmu.hpp"
#include "oaken/perf_model.hpp"
#include "oaken/profiler.hpp"
#include "oaken/quant.hpp"

namespace {

using namespace oaken;

std::vector<float> heavy_tailed(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::student_t_distribution<float> t(3.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = round_to_half(t(rng));
  return v;
}

void BM_ExtractQuad(benchmark::State& state) {
  const auto v = heavy_tailed(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(extract_quad(v, GroupConfig{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExtractQuad)->Arg(128)->Arg(4096)->Arg(40960);

void BM_OnlineTopk(benchmark::State& state) {
  const auto v = heavy_tailed(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(online_topk_grouping(v, GroupConfig{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OnlineTopk)->Arg(128)->Arg(4096);

void BM_Quantize(benchmark::State& state) {
  const auto v = heavy_tailed(static_cast<std::size_t>(state.range(0)), 3);
  const ThresholdQuad q = extract_quad(v, GroupConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(quantize_token({v, {}}, q, GroupConfig{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Quantize)->Arg(128)->Arg(4096);

void BM_EncodeDecode(benchmark::State& state) {
  const auto v = heavy_tailed(static_cast<std::size_t>(state.range(0)), 4);
  const ThresholdQuad q = extract_quad(v, GroupConfig{});
  const QuantizedToken qt = quantize_token({v, {}}, q, GroupConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(decode(encode(qt, GroupConfig{}), GroupConfig{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncodeDecode)->Arg(128)->Arg(4096);

void BM_Dequantize(benchmark::State& state) {
  const auto v = heavy_tailed(128, 5);
  const ThresholdQuad q = extract_quad(v, GroupConfig{});
  const QuantizedToken qt = quantize_token({v, {}}, q, GroupConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(dequantize_token(qt, q));
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_Dequantize);

// Write a stream of tokens for one key, then read the whole history back.
void BM_MmuWriteRead(benchmark::State& state) {
  const auto tokens = static_cast<std::uint32_t>(state.range(0));
  std::vector<EncodedToken> encoded;
  for (std::uint32_t t = 0; t < tokens; ++t) {
    const auto v = heavy_tailed(128, 100 + t);
    const ThresholdQuad q = extract_quad(v, GroupConfig{});
    encoded.push_back(encode(quantize_token({v, {0, KvKind::Key, t}}, q, GroupConfig{}), GroupConfig{}));
  }
  for (auto _ : state) {
    Mmu mmu(MemoryConfig{});
    const KvKey key{0, 0, KvKind::Key, 0};
    for (const auto& e : encoded) mmu.write_token(key, e);
    benchmark::DoNotOptimize(mmu.read_sequence(key, 0, tokens));
  }
  state.SetItemsProcessed(state.iterations() * tokens);
}
BENCHMARK(BM_MmuWriteRead)->Arg(64)->Arg(1024);

void BM_RunGeneration(benchmark::State& state) {
  const auto w = workload_preset("llama2-7b");
  const auto a = accelerator_preset("lpddr");
  for (auto _ : state) benchmark::DoNotOptimize(run_generation(w, a, PerfMode::Oaken, true));
}
BENCHMARK(BM_RunGeneration);

}  // namespace

BENCHMARK_MAIN();

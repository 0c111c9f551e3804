// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oaken/kv_model.hpp"
#include "oaken/mmu.hpp"
#include "oaken/perf_model.hpp"
#include "oaken/replay.hpp"

namespace oaken::cli {

enum ExitCode : int { kOk = 0, kPropertyFailure = 1, kConfigError = 2, kIoError = 3 };

/// Resolved configuration text and its sha256, written next to every output.
struct ResolvedConfig {
  std::string text;
  std::string digest;
};

struct GenTraceArgs {
  std::filesystem::path out_dir;
  std::string import_raw;
  std::string model_name = "synthetic";
  std::uint32_t layers = 2;
  std::uint32_t kv_heads = 1;
  std::uint32_t head_dim = 128;
  std::uint32_t tokens = 256;
  std::string kinds = "both";
  std::uint64_t seed = 1;
  double base_mean = 0.0;
  double base_std = 1.0;
  double layer_std_growth = 0.0;
  std::vector<std::uint32_t> outlier_channels;
  double outlier_multiplier = 10.0;
  double exception_rate = 0.0;
};

struct GroupArgs {
  double ratio_outer = 0.04;
  double ratio_middle = 0.90;
  double ratio_inner = 0.06;
  std::size_t segment_len = kDefaultSegmentLen;
  GroupConfig resolve() const;
};

struct ProfileArgs {
  std::string trace;
  std::filesystem::path out_dir;
  std::uint32_t runs = 100;
  GroupArgs group;
};

struct EvalArgs {
  std::string trace;
  std::string profile;
  std::filesystem::path out_dir;
  std::uint64_t toy_seed = 7;
  bool no_toy = false;
};

struct SimulateArgs {
  std::filesystem::path out_dir;
  std::string workload = "llama2-7b";
  std::string accelerator = "lpddr";
  std::optional<double> bandwidth;
  std::optional<double> capacity;
  std::optional<std::uint32_t> cores;
  std::optional<double> macs_per_core;
  std::optional<double> frequency;
  std::optional<double> quant_rate;
  std::optional<double> dequant_rate;
  std::optional<double> weight_bytes;
  std::uint32_t batch = 64;
  std::uint32_t seq_input = 1024;
  std::uint32_t seq_output = 1024;
  double kv_bits = 4.8;
  std::vector<std::string> modes{"fp16", "oaken"};
  bool serial = false;
  std::string axis = "batch";
  std::vector<double> grid;
  std::vector<std::string> memories{"lpddr", "hbm"};
  std::uint64_t page_size = 4096;
  std::uint64_t burst_size = 64;
  std::uint64_t mmu_capacity = 64ull << 20;
  bool no_replay = false;
  ReplayConfig replay;
};

struct RoundtripArgs {
  std::filesystem::path out_dir;
  std::uint64_t seed = 1;
  std::uint64_t fuzz_tokens = 100000;
  std::uint64_t mmu_schedules = 1000;
  std::uint64_t burst_cases = 1000;
  std::vector<std::string> properties;
  std::optional<std::uint64_t> replay_seed;
  bool inject_fault = false;
};

struct DumpArgs {
  std::string trace;
  std::string profile;
  std::uint32_t layer = 0;
  std::string kind = "key";
  std::uint32_t token = 0;
};

int run_gen_trace(const GenTraceArgs& a, const ResolvedConfig& cfg);
int run_profile(const ProfileArgs& a, const ResolvedConfig& cfg);
int run_eval(const EvalArgs& a, const ResolvedConfig& cfg);
int run_simulate(const SimulateArgs& a, const ResolvedConfig& cfg);
int run_roundtrip(const RoundtripArgs& a, const ResolvedConfig& cfg);
int run_dump_token(const DumpArgs& a);

}  // namespace oaken::cli

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "json.hpp"
#include "oaken/digest.hpp"
#include "oaken/encoding.hpp"
#include "oaken/error.hpp"
#include "oaken/eval.hpp"
#include "oaken/profile_io.hpp"
#include "oaken/profiler.hpp"
#include "oaken/property_suite.hpp"
#include "oaken/quant.hpp"
#include "oaken/synthetic.hpp"
#include "oaken/trace_io.hpp"

namespace oaken::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

static_assert(kBitsPerOutlierFused == 12 && kBitsPerOutlierMixed == 23);

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw FormatError("short write to '" + path.string() + "'");
}

void prepare_out_dir(const fs::path& dir, const ResolvedConfig& cfg) {
  if (dir.empty()) throw ConfigError("--out-dir is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create '" + dir.string() + "': " + ec.message());
  write_text(dir / "resolved_config.toml", cfg.text);
  write_text(dir / "resolved_config.sha256", cfg.digest + "\n");
}

KindMask parse_kinds(const std::string& text) {
  if (text == "both") return kAllKinds;
  if (text == "key") return kKeyBit;
  if (text == "value") return kValueBit;
  throw ConfigError("kinds must be key, value or both");
}

std::vector<double> default_grid(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Batch: return {16, 32, 64, 128, 256};
    case SweepAxis::SeqLen: return {1024, 2048, 4096, 8192, 16384, 32768};
    case SweepAxis::KvBits: return {2, 3, 4, 4.8, 6, 8, 16};
    case SweepAxis::Memory: return {};
  }
  return {};
}

}  // namespace

GroupConfig GroupArgs::resolve() const {
  GroupConfig g;
  g.ratio_outer = ratio_outer;
  g.ratio_middle = ratio_middle;
  g.ratio_inner = ratio_inner;
  g.segment_len = segment_len;
  g.validate();
  return g;
}

int run_gen_trace(const GenTraceArgs& a, const ResolvedConfig& cfg) {
  prepare_out_dir(a.out_dir, cfg);
  KvTrace trace = [&] {
    if (!a.import_raw.empty()) {
      TraceMeta meta{a.model_name, a.layers, a.kv_heads * a.head_dim, a.kv_heads, a.head_dim};
      return import_raw_trace(a.import_raw, meta, a.tokens, parse_kinds(a.kinds));
    }
    SyntheticSpec spec;
    spec.model_name = a.model_name;
    spec.num_layers = a.layers;
    spec.num_kv_heads = a.kv_heads;
    spec.head_dim = a.head_dim;
    spec.num_tokens = a.tokens;
    spec.kinds = parse_kinds(a.kinds);
    spec.base_mean = a.base_mean;
    spec.base_std = a.base_std;
    spec.layer_std_growth = a.layer_std_growth;
    spec.outlier_channels = a.outlier_channels;
    spec.outlier_multiplier = a.outlier_multiplier;
    spec.exception_rate = a.exception_rate;
    return generate_synthetic_trace(spec, a.seed);
  }();
  const fs::path out = a.out_dir / "trace.okvt";
  save_trace(trace, out);
  std::cout << "wrote " << out.string() << " (" << trace.meta().num_layers << " layers, "
            << trace.num_tokens() << " tokens, vector_len " << trace.vector_len() << ")\n"
            << "trace sha256 " << trace_digest(trace) << "\n";
  return kOk;
}

int run_profile(const ProfileArgs& a, const ResolvedConfig& cfg) {
  const GroupConfig group = a.group.resolve();
  const KvTrace trace = load_trace(a.trace);
  const RunPartition runs = RunPartition::contiguous(trace.num_tokens(), a.runs);
  const ThresholdProfile p = profile(trace, group, runs);
  prepare_out_dir(a.out_dir, cfg);
  save_profile(p, a.out_dir / "profile.json");
  std::cout << "profiled " << p.quads.size() << " (layer, kind) cells over " << a.runs
            << " runs -> " << (a.out_dir / "profile.json").string() << "\n";
  return kOk;
}

int run_eval(const EvalArgs& a, const ResolvedConfig& cfg) {
  const KvTrace trace = load_trace(a.trace);
  const ThresholdProfile p = load_profile(a.profile);
  EvalOptions options;
  options.group = p.provenance.group_config;
  options.toy_seed = a.toy_seed;
  options.toy_attention = !a.no_toy;
  ErrorReport report = evaluate(trace, p, options);
  report.config_digest = cfg.digest;
  prepare_out_dir(a.out_dir, cfg);
  write_text(a.out_dir / "eval.csv", report_to_csv(report));
  write_text(a.out_dir / "eval.json", report_to_text(report));

  std::map<Method, std::pair<double, std::size_t>> mse;
  std::size_t cells = 0;
  std::size_t oaken_wins = 0;
  std::map<std::pair<std::uint32_t, KvKind>, double> uniform;
  for (const auto& r : report.rows) {
    auto& m = mse[r.method];
    m.first += r.mse;
    ++m.second;
    if (r.method == Method::Uniform4) uniform[{r.layer, r.kind}] = r.mse;
  }
  for (const auto& r : report.rows) {
    if (r.method != Method::Oaken) continue;
    ++cells;
    oaken_wins += r.mse <= uniform[{r.layer, r.kind}] ? 1 : 0;
  }
  for (const auto& [method, m] : mse) {
    std::printf("%-10s mean mse %.6g\n", std::string(to_string(method)).c_str(), m.first / m.second);
  }
  std::printf("oaken mse <= uniform4 in %zu / %zu cells\n", oaken_wins, cells);
  std::printf("encoded size formula: %llu tokens checked, %llu mismatches; bits/outlier %zu fused vs %zu mixed\n",
              static_cast<unsigned long long>(report.tokens_checked),
              static_cast<unsigned long long>(report.size_mismatches), kBitsPerOutlierFused,
              kBitsPerOutlierMixed);
  return report.size_mismatches == 0 ? kOk : kPropertyFailure;
}

int run_simulate(const SimulateArgs& a, const ResolvedConfig& cfg) {
  WorkloadConfig w = workload_preset(a.workload);
  w.batch = a.batch;
  w.seq_input = a.seq_input;
  w.seq_output = a.seq_output;
  w.kv_bits_effective = a.kv_bits;
  if (a.weight_bytes) w.weight_bytes = *a.weight_bytes;
  w.validate();
  AcceleratorConfig acc = accelerator_preset(a.accelerator);
  if (a.bandwidth) acc.memory.bandwidth = *a.bandwidth;
  if (a.capacity) acc.memory.capacity = *a.capacity;
  if (a.bandwidth || a.capacity) acc.memory.label = "custom";
  if (a.cores) acc.num_cores = *a.cores;
  if (a.macs_per_core) acc.macs_per_core_per_cycle = *a.macs_per_core;
  if (a.frequency) acc.frequency = *a.frequency;
  if (a.quant_rate) acc.engines.quantize_elements_per_cycle = *a.quant_rate;
  if (a.dequant_rate) acc.engines.dequantize_elements_per_cycle = *a.dequant_rate;
  acc.validate();

  SweepGrid grid;
  grid.axis = parse_sweep_axis(a.axis);
  grid.values = a.grid.empty() ? default_grid(grid.axis) : a.grid;
  if (grid.axis == SweepAxis::Memory) {
    for (const auto& name : a.memories) grid.memories.push_back(accelerator_preset(name).memory);
  }
  if (a.modes.empty()) throw ConfigError("at least one --mode is required");
  std::vector<SweepRow> rows;
  for (const auto& name : a.modes) {
    auto part = sweep(grid, w, acc, parse_perf_mode(name), !a.serial);
    rows.insert(rows.end(), part.begin(), part.end());
  }

  MemoryConfig mc;
  mc.page_size = a.page_size;
  mc.burst_size = a.burst_size;
  mc.capacity = a.mmu_capacity;
  mc.validate();
  json mmu_report;
  if (!a.no_replay) {
    const ReplayResult r = replay_generation_schedule(w, mc, a.replay, GroupConfig{});
    mmu_report["record"] = "mmu_replay";
    mmu_report["config_digest"] = cfg.digest;
    mmu_report["streams"] = r.streams;
    mmu_report["tokens_written"] = r.tokens_written;
    mmu_report["tokens_read"] = r.tokens_read;
    mmu_report["stats"] = json::parse(r.stats.to_text());
    mmu_report["read_stats"] = json::parse(r.read_stats.to_text());
  }

  prepare_out_dir(a.out_dir, cfg);
  write_text(a.out_dir / "sweep.csv", sweep_to_csv(rows));
  write_text(a.out_dir / "sweep.jsonl", sweep_to_text(rows));
  if (!a.no_replay) write_text(a.out_dir / "mmu.json", mmu_report.dump(2) + "\n");

  std::printf("%-8s %6s %6s %7s %14s %10s %s\n", "mode", "batch", "seq", "kv_bits", "tokens/s",
              "t_attn", "oom");
  for (const auto& r : rows) {
    std::printf("%-8s %6u %6u %7.3g %14.6g %10.4g %s\n", std::string(to_string(r.mode)).c_str(),
                r.batch, r.seq, r.kv_bits, r.throughput, r.t_attn, r.oom ? "OOM" : "-");
  }
  if (!a.no_replay) {
    std::printf("mmu replay: %s\n", mmu_report["read_stats"].dump().c_str());
  }
  return kOk;
}

int run_roundtrip(const RoundtripArgs& a, const ResolvedConfig& cfg) {
  PropertyConfig pc;
  pc.seed = a.seed;
  pc.fuzz_tokens = a.fuzz_tokens;
  pc.mmu_schedules = a.mmu_schedules;
  pc.burst_cases = a.burst_cases;
  pc.replay_seed = a.replay_seed;
  pc.inject_sparse_fault = a.inject_fault;
  for (const auto& name : a.properties) pc.only.push_back(parse_property(name));
  const PropertyReport report = run_property_suite(pc);
  if (!a.out_dir.empty()) {
    prepare_out_dir(a.out_dir, cfg);
    write_text(a.out_dir / "properties.json", report.to_text());
  }
  for (const auto& r : report.results) {
    std::printf("%-13s %s cases=%llu failures=%llu checks=%llu\n",
                std::string(to_string(r.property)).c_str(), r.failures == 0 ? "PASS" : "FAIL",
                static_cast<unsigned long long>(r.cases), static_cast<unsigned long long>(r.failures),
                static_cast<unsigned long long>(r.checks));
    if (r.min_failing_seed) {
      std::printf("  minimal reproducing seed %llu (rerun with --property %s --replay-seed %llu)\n",
                  static_cast<unsigned long long>(*r.min_failing_seed),
                  std::string(to_string(r.property)).c_str(),
                  static_cast<unsigned long long>(*r.min_failing_seed));
      for (const auto& m : r.messages) std::printf("  %s\n", m.c_str());
    }
  }
  return report.passed() ? kOk : kPropertyFailure;
}

int run_dump_token(const DumpArgs& a) {
  const KvTrace trace = load_trace(a.trace);
  const ThresholdProfile p = load_profile(a.profile);
  const KvKind kind = parse_kind(a.kind);
  if (a.layer >= trace.meta().num_layers || a.token >= trace.num_tokens() || !trace.has_kind(kind)) {
    throw ConfigError("token (layer " + std::to_string(a.layer) + ", " + a.kind + ", token " +
                      std::to_string(a.token) + ") is not in the trace");
  }
  const GroupConfig& group = p.provenance.group_config;
  const QuantizedToken q = quantize_token(trace.view(a.layer, kind, a.token), p.at(a.layer, kind), group);
  std::cout << dump_token(encode(q, group), group);
  return kOk;
}

}  // namespace oaken::cli

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// oaken: profile, evaluate and simulate outlier-aware KV cache quantization.
// Every option can also come from a TOML file passed with --config; keys
// live in a section named after the subcommand (e.g. [simulate]).

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "oaken/digest.hpp"
#include "oaken/error.hpp"

namespace {

using namespace oaken;
using namespace oaken::cli;

void add_group_options(CLI::App* sub, GroupArgs& g) {
  sub->add_option("--ratio-outer", g.ratio_outer, "Outer group fraction (both tails)")->capture_default_str();
  sub->add_option("--ratio-middle", g.ratio_middle, "Middle group fraction")->capture_default_str();
  sub->add_option("--ratio-inner", g.ratio_inner, "Inner group fraction")->capture_default_str();
  sub->add_option("--segment-len", g.segment_len, "Sparse index segment length")->capture_default_str();
}

CLI::Option* add_out_dir(CLI::App* sub, std::filesystem::path& dir, bool required = true) {
  auto* opt = sub->add_option("--out-dir,-o", dir, "Output directory")->configurable(false);
  if (required) opt->required();
  return opt;
}

ResolvedConfig resolve(const CLI::App* sub) {
  ResolvedConfig cfg;
  cfg.text = "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false);
  cfg.digest = sha256_hex(cfg.text);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Outlier-aware KV cache quantization toolkit"};
  app.set_config("--config", "", "TOML config file; keys in a [subcommand] section");
  app.require_subcommand(1);

  GenTraceArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-trace", "Generate a synthetic trace or import raw float32 data");
  add_out_dir(gen_cmd, gen.out_dir);
  gen_cmd->add_option("--import-raw", gen.import_raw, "Raw little-endian binary16 file laid out [layer][kind][token][elem]");
  gen_cmd->add_option("--model-name", gen.model_name)->capture_default_str();
  gen_cmd->add_option("--layers", gen.layers)->capture_default_str();
  gen_cmd->add_option("--kv-heads", gen.kv_heads)->capture_default_str();
  gen_cmd->add_option("--head-dim", gen.head_dim)->capture_default_str();
  gen_cmd->add_option("--tokens", gen.tokens)->capture_default_str();
  gen_cmd->add_option("--kinds", gen.kinds, "key, value or both")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--base-mean", gen.base_mean)->capture_default_str();
  gen_cmd->add_option("--base-std", gen.base_std)->capture_default_str();
  gen_cmd->add_option("--layer-std-growth", gen.layer_std_growth)->capture_default_str();
  gen_cmd->add_option("--outlier-channels", gen.outlier_channels, "Channels scaled by the outlier multiplier");
  gen_cmd->add_option("--outlier-multiplier", gen.outlier_multiplier)->capture_default_str();
  gen_cmd->add_option("--exception-rate", gen.exception_rate, "Per-element probability of a random outlier")
      ->capture_default_str();

  ProfileArgs prof;
  auto* prof_cmd = app.add_subcommand("profile", "Extract per-layer threshold quads from a trace");
  prof_cmd->add_option("--trace", prof.trace)->required();
  add_out_dir(prof_cmd, prof.out_dir);
  prof_cmd->add_option("--runs", prof.runs, "Number of contiguous profiling runs")->capture_default_str();
  add_group_options(prof_cmd, prof.group);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compare oaken, uniform4 and topk_mixed reconstruction error");
  eval_cmd->add_option("--trace", ev.trace)->required();
  eval_cmd->add_option("--profile", ev.profile)->required();
  add_out_dir(eval_cmd, ev.out_dir);
  eval_cmd->add_option("--toy-seed", ev.toy_seed)->capture_default_str();
  eval_cmd->add_flag("--no-toy", ev.no_toy, "Skip the toy attention check");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Performance-model sweep plus MMU replay");
  add_out_dir(sim_cmd, sim.out_dir);
  sim_cmd->add_option("--workload", sim.workload, "llama2-7b or llama2-13b")->capture_default_str();
  sim_cmd->add_option("--accelerator", sim.accelerator, "lpddr or hbm")->capture_default_str();
  sim_cmd->add_option("--bandwidth", sim.bandwidth, "Memory bandwidth override, bytes/s");
  sim_cmd->add_option("--capacity", sim.capacity, "Memory capacity override, bytes");
  sim_cmd->add_option("--cores", sim.cores);
  sim_cmd->add_option("--macs-per-core", sim.macs_per_core, "MACs per core per cycle");
  sim_cmd->add_option("--frequency", sim.frequency, "Hz");
  sim_cmd->add_option("--quant-rate", sim.quant_rate, "Quantize elements per cycle per core");
  sim_cmd->add_option("--dequant-rate", sim.dequant_rate, "Dequantize elements per cycle per core");
  sim_cmd->add_option("--weight-bytes", sim.weight_bytes, "Model weights at 16-bit, bytes");
  sim_cmd->add_option("--batch", sim.batch)->capture_default_str();
  sim_cmd->add_option("--seq-input", sim.seq_input)->capture_default_str();
  sim_cmd->add_option("--seq-output", sim.seq_output)->capture_default_str();
  sim_cmd->add_option("--kv-bits", sim.kv_bits, "Effective KV bits in oaken mode")->capture_default_str();
  sim_cmd->add_option("--mode", sim.modes, "fp16, oaken, weight4")->capture_default_str();
  sim_cmd->add_flag("--serial", sim.serial, "Do not overlap engines with attention reads");
  sim_cmd->add_option("--axis", sim.axis, "batch, seq_len, kv_bits or memory")->capture_default_str();
  sim_cmd->add_option("--grid", sim.grid, "Sweep points (default depends on axis)");
  sim_cmd->add_option("--memories", sim.memories, "Memory presets for the memory axis")->capture_default_str();
  sim_cmd->add_option("--page-size", sim.page_size)->capture_default_str();
  sim_cmd->add_option("--burst-size", sim.burst_size)->capture_default_str();
  sim_cmd->add_option("--mmu-capacity", sim.mmu_capacity)->capture_default_str();
  sim_cmd->add_flag("--no-replay", sim.no_replay, "Skip the MMU replay");
  sim_cmd->add_option("--replay-requests", sim.replay.requests)->capture_default_str();
  sim_cmd->add_option("--replay-layers", sim.replay.layers)->capture_default_str();
  sim_cmd->add_option("--replay-tokens", sim.replay.tokens)->capture_default_str();
  sim_cmd->add_option("--replay-seed", sim.replay.seed)->capture_default_str();

  RoundtripArgs rt;
  auto* rt_cmd = app.add_subcommand("roundtrip", "Run the property suite");
  add_out_dir(rt_cmd, rt.out_dir, false);
  rt_cmd->add_option("--seed", rt.seed)->capture_default_str();
  rt_cmd->add_option("--fuzz-tokens", rt.fuzz_tokens)->capture_default_str();
  rt_cmd->add_option("--mmu-schedules", rt.mmu_schedules)->capture_default_str();
  rt_cmd->add_option("--burst-cases", rt.burst_cases)->capture_default_str();
  rt_cmd->add_option("--property", rt.properties,
                     "partition, round_trip, bijection, mmu_fidelity, burst_math (default all)");
  rt_cmd->add_option("--replay-seed", rt.replay_seed, "Run a single case with this seed");
  rt_cmd->add_flag("--inject-fault", rt.inject_fault, "Test hook: corrupt one sparse index per token")
      ->group("Test hooks");

  DumpArgs dump;
  auto* dump_cmd = app.add_subcommand("dump-token", "Print the encoded byte layout of one token");
  dump_cmd->add_option("--trace", dump.trace)->required();
  dump_cmd->add_option("--profile", dump.profile)->required();
  dump_cmd->add_option("--layer", dump.layer)->capture_default_str();
  dump_cmd->add_option("--kind", dump.kind)->capture_default_str();
  dump_cmd->add_option("--token", dump.token)->capture_default_str();

  for (auto* sub : app.get_subcommands({})) sub->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*gen_cmd) return run_gen_trace(gen, resolve(gen_cmd));
    if (*prof_cmd) return run_profile(prof, resolve(prof_cmd));
    if (*eval_cmd) return run_eval(ev, resolve(eval_cmd));
    if (*sim_cmd) return run_simulate(sim, resolve(sim_cmd));
    if (*rt_cmd) return run_roundtrip(rt, resolve(rt_cmd));
    if (*dump_cmd) return run_dump_token(dump);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kIoError;
  } catch (const ProfilingError& e) {
    std::cerr << "profiling error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPropertyFailure;
  }
  return kOk;
}

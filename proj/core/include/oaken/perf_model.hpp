// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Analytical model of batched generation on a KV-quantizing accelerator.
//
// Per generated token the model splits work into
//   * non-attention: weight-bound, read once per iteration for the whole
//     batch: max(weight traffic / bandwidth, batch * MACs / compute);
//   * attention: each request streams its own KV history, so traffic is
//     batch * layers * 2 * t * kv_heads * head_dim * kv_bits / 8 bytes;
//   * quantize / dequantize: engine time linear in the number of elements.
// In pipelined mode engine time hides behind the attention DMA stream and
// only the excess is exposed; in serial mode it adds up.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace oaken {

enum class PerfMode : std::uint8_t { Fp16, Oaken, Weight4 };
std::string_view to_string(PerfMode mode);
PerfMode parse_perf_mode(std::string_view text);

struct MemorySpec {
  double bandwidth = 0.0;  // bytes / s
  double capacity = 0.0;   // bytes
  std::string label;
};

/// Throughput of the quantization engines, in elements per cycle per core.
struct EngineConfig {
  double quantize_elements_per_cycle = 4.0;
  double dequantize_elements_per_cycle = 4096.0;
};

struct AcceleratorConfig {
  std::uint32_t num_cores = 8;
  double macs_per_core_per_cycle = 4096.0;
  double frequency = 1.0e9;  // Hz
  MemorySpec memory;
  EngineConfig engines;

  double compute_rate() const { return num_cores * macs_per_core_per_cycle * frequency; }
  void validate() const;
};

struct WorkloadConfig {
  std::string model = "custom";
  std::uint32_t num_layers = 32;
  std::uint32_t hidden_dim = 4096;
  std::uint32_t num_heads = 32;
  std::uint32_t num_kv_heads = 32;
  std::uint32_t head_dim = 128;
  double weight_bytes = 13.48e9;  // at 16-bit precision
  std::uint32_t batch = 64;
  std::uint32_t seq_input = 1024;
  std::uint32_t seq_output = 1024;
  double kv_bits_effective = 4.8;  // codes + sparse entries, excluding scale records
  double weight_bits = 16.0;

  std::uint64_t kv_vector_len() const { return std::uint64_t{num_kv_heads} * head_dim; }
  void validate() const;
};

struct PhaseLatency {
  double non_attention = 0.0;
  double attention = 0.0;
  double quantize = 0.0;
  double dequantize = 0.0;
  double exposed_overhead = 0.0;

  double total() const { return non_attention + attention + exposed_overhead; }
  PhaseLatency& operator+=(const PhaseLatency& other);
};

/// Resolved per-mode precisions.
struct ModePrecision {
  double kv_bits = 16.0;
  double weight_bits = 16.0;
  bool kv_engines = false;
};
ModePrecision resolve_precision(const WorkloadConfig& w, PerfMode mode);

/// Latency of one generation step reading a KV history of length t.
PhaseLatency iteration_latency(const WorkloadConfig& w, const AcceleratorConfig& a, PerfMode mode,
                               bool pipelined, std::uint64_t t);

/// Resident KV bytes for `tokens` tokens of every request in the batch. In
/// oaken mode this adds one 96-bit scale record per head_dim elements.
double kv_resident_bytes(const WorkloadConfig& w, PerfMode mode, std::uint64_t tokens);
double weight_resident_bytes(const WorkloadConfig& w, PerfMode mode);

struct GenerationResult {
  double throughput = 0.0;  // generated tokens / s; 0 when out of memory
  PhaseLatency breakdown;   // summed over generation iterations
  double prefill = 0.0;     // compute-bound prefill time
  double total_time = 0.0;  // prefill + generation
  double peak_memory = 0.0;
  bool oom = false;
  std::uint64_t oom_token = 0;  // first sequence position whose KV does not fit
};

/// Sums iteration_latency over t = seq_input .. seq_input + seq_output - 1.
/// Step t keeps t + 1 tokens resident; the first step (or the prefill state
/// t = seq_input - 1) that exceeds capacity is reported as oom_token.
GenerationResult run_generation(const WorkloadConfig& w, const AcceleratorConfig& a, PerfMode mode,
                                bool pipelined);

enum class SweepAxis : std::uint8_t { Batch, SeqLen, KvBits, Memory };
SweepAxis parse_sweep_axis(std::string_view text);
std::string_view to_string(SweepAxis axis);

struct SweepGrid {
  SweepAxis axis = SweepAxis::Batch;
  std::vector<double> values;        // batch sizes, total sequence lengths or KV bits
  std::vector<MemorySpec> memories;  // for SweepAxis::Memory
};

struct SweepRow {
  PerfMode mode = PerfMode::Fp16;
  std::uint32_t batch = 0;
  std::uint32_t seq = 0;  // input + output
  double kv_bits = 0.0;
  double throughput = 0.0;
  double t_nonattn = 0.0;
  double t_attn = 0.0;
  double t_q = 0.0;
  double t_dq = 0.0;
  double peak_mem = 0.0;
  bool oom = false;
  std::string memory_label;
};

/// One row per grid point, OOM points included. A total sequence length S
/// splits as input = S / 2, output = S - S / 2. A KV-bits point of 16 means
/// uncompressed KV (no engines).
std::vector<SweepRow> sweep(const SweepGrid& grid, const WorkloadConfig& w,
                            const AcceleratorConfig& a, PerfMode mode, bool pipelined);

/// Header: mode,batch,seq,kv_bits,throughput,t_nonattn,t_attn,t_q,t_dq,peak_mem,oom_flag
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
/// One JSON object per line, same fields plus memory label.
std::string sweep_to_text(const std::vector<SweepRow>& rows);

/// Representative presets. Their constants are editable examples, not
/// measured hardware figures.
AcceleratorConfig accelerator_preset(std::string_view name);  // "lpddr", "hbm"
WorkloadConfig workload_preset(std::string_view name);        // "llama2-7b", "llama2-13b"

}  // namespace oaken

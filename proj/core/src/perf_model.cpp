// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/perf_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "oaken/encoding.hpp"
#include "oaken/error.hpp"

namespace oaken {

std::string_view to_string(PerfMode mode) {
  switch (mode) {
    case PerfMode::Fp16: return "fp16";
    case PerfMode::Oaken: return "oaken";
    case PerfMode::Weight4: return "weight4";
  }
  return "?";
}

PerfMode parse_perf_mode(std::string_view text) {
  if (text == "fp16") return PerfMode::Fp16;
  if (text == "oaken") return PerfMode::Oaken;
  if (text == "weight4") return PerfMode::Weight4;
  throw ConfigError("unknown mode '" + std::string(text) + "' (expected fp16, oaken or weight4)");
}

void AcceleratorConfig::validate() const {
  if (num_cores == 0 || !(macs_per_core_per_cycle > 0) || !(frequency > 0)) {
    throw ConfigError("accelerator compute parameters must be positive");
  }
  if (!(memory.bandwidth > 0) || !(memory.capacity > 0)) {
    throw ConfigError("memory bandwidth and capacity must be positive");
  }
  if (!(engines.quantize_elements_per_cycle > 0) || !(engines.dequantize_elements_per_cycle > 0)) {
    throw ConfigError("engine throughputs must be positive");
  }
}

void WorkloadConfig::validate() const {
  if (num_layers == 0 || num_heads == 0 || num_kv_heads == 0 || head_dim == 0) {
    throw ConfigError("workload dimensions must be positive");
  }
  if (std::uint64_t{num_heads} * head_dim != hidden_dim) {
    throw ConfigError("hidden_dim must equal num_heads x head_dim");
  }
  if (!(weight_bytes > 0)) throw ConfigError("weight_bytes must be positive");
  if (batch == 0 || seq_output == 0) throw ConfigError("batch and seq_output must be positive");
  if (!(kv_bits_effective > 0.0 && kv_bits_effective <= 16.0)) {
    throw ConfigError("kv_bits_effective must lie in (0, 16]");
  }
  if (!(weight_bits > 0.0 && weight_bits <= 16.0)) throw ConfigError("weight_bits must lie in (0, 16]");
}

PhaseLatency& PhaseLatency::operator+=(const PhaseLatency& o) {
  non_attention += o.non_attention;
  attention += o.attention;
  quantize += o.quantize;
  dequantize += o.dequantize;
  exposed_overhead += o.exposed_overhead;
  return *this;
}

ModePrecision resolve_precision(const WorkloadConfig& w, PerfMode mode) {
  switch (mode) {
    case PerfMode::Fp16: return {16.0, w.weight_bits, false};
    case PerfMode::Weight4: return {16.0, 4.0, false};
    case PerfMode::Oaken: return {w.kv_bits_effective, w.weight_bits, w.kv_bits_effective < 16.0};
  }
  return {};
}

PhaseLatency iteration_latency(const WorkloadConfig& w, const AcceleratorConfig& a, PerfMode mode,
                               bool pipelined, std::uint64_t t) {
  const ModePrecision p = resolve_precision(w, mode);
  const double bandwidth = a.memory.bandwidth;
  PhaseLatency lat;
  const double weight_traffic = w.weight_bytes * (p.weight_bits / 16.0);
  const double weight_macs = w.batch * (w.weight_bytes / 2.0);
  lat.non_attention = std::max(weight_traffic / bandwidth, weight_macs / a.compute_rate());

  const double per_token_elements =
      static_cast<double>(w.batch) * w.num_layers * 2.0 * static_cast<double>(w.kv_vector_len());
  const double kv_traffic = per_token_elements * static_cast<double>(t) * p.kv_bits / 8.0;
  lat.attention = kv_traffic / bandwidth;

  if (p.kv_engines) {
    const double cycles_per_s = a.num_cores * a.frequency;
    lat.quantize = per_token_elements / (a.engines.quantize_elements_per_cycle * cycles_per_s);
    lat.dequantize = per_token_elements * static_cast<double>(t) /
                     (a.engines.dequantize_elements_per_cycle * cycles_per_s);
  }
  const double engine_time = lat.quantize + lat.dequantize;
  lat.exposed_overhead = pipelined ? std::max(0.0, engine_time - lat.attention) : engine_time;
  return lat;
}

double kv_resident_bytes(const WorkloadConfig& w, PerfMode mode, std::uint64_t tokens) {
  const ModePrecision p = resolve_precision(w, mode);
  double bits = p.kv_bits;
  if (p.kv_engines) bits += static_cast<double>(kScaleRecordBits) / w.head_dim;
  return static_cast<double>(w.batch) * w.num_layers * 2.0 * static_cast<double>(w.kv_vector_len()) *
         static_cast<double>(tokens) * bits / 8.0;
}

double weight_resident_bytes(const WorkloadConfig& w, PerfMode mode) {
  return w.weight_bytes * (resolve_precision(w, mode).weight_bits / 16.0);
}

GenerationResult run_generation(const WorkloadConfig& w, const AcceleratorConfig& a, PerfMode mode,
                                bool pipelined) {
  w.validate();
  a.validate();
  GenerationResult r;
  const double weights = weight_resident_bytes(w, mode);
  const std::uint64_t first = w.seq_input;
  const std::uint64_t last = first + w.seq_output - 1;

  const std::uint64_t prefill_state = first == 0 ? 0 : first - 1;
  if (first > 0 && weights + kv_resident_bytes(w, mode, first) > a.memory.capacity) {
    r.oom = true;
    r.oom_token = prefill_state;
  }
  r.prefill = static_cast<double>(w.batch) * w.seq_input * (w.weight_bytes / 2.0) / a.compute_rate();
  for (std::uint64_t t = first; t <= last; ++t) {
    if (!r.oom && weights + kv_resident_bytes(w, mode, t + 1) > a.memory.capacity) {
      r.oom = true;
      r.oom_token = t;
    }
    r.breakdown += iteration_latency(w, a, mode, pipelined, t);
  }
  r.total_time = r.prefill + r.breakdown.total();
  r.peak_memory = weights + kv_resident_bytes(w, mode, last + 1);
  r.throughput = r.oom ? 0.0 : static_cast<double>(w.batch) * w.seq_output / r.total_time;
  return r;
}

SweepAxis parse_sweep_axis(std::string_view text) {
  if (text == "batch") return SweepAxis::Batch;
  if (text == "seq_len" || text == "seq") return SweepAxis::SeqLen;
  if (text == "kv_bits") return SweepAxis::KvBits;
  if (text == "memory") return SweepAxis::Memory;
  throw ConfigError("unknown sweep axis '" + std::string(text) + "'");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Batch: return "batch";
    case SweepAxis::SeqLen: return "seq_len";
    case SweepAxis::KvBits: return "kv_bits";
    case SweepAxis::Memory: return "memory";
  }
  return "?";
}

std::vector<SweepRow> sweep(const SweepGrid& grid, const WorkloadConfig& w,
                            const AcceleratorConfig& a, PerfMode mode, bool pipelined) {
  const std::size_t points = grid.axis == SweepAxis::Memory ? grid.memories.size() : grid.values.size();
  if (points == 0) throw ConfigError("sweep grid is empty");
  std::vector<SweepRow> rows;
  rows.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    WorkloadConfig wp = w;
    AcceleratorConfig ap = a;
    PerfMode mp = mode;
    switch (grid.axis) {
      case SweepAxis::Batch: wp.batch = static_cast<std::uint32_t>(grid.values[i]); break;
      case SweepAxis::SeqLen: {
        const auto total = static_cast<std::uint32_t>(grid.values[i]);
        wp.seq_input = total / 2;
        wp.seq_output = total - total / 2;
        break;
      }
      case SweepAxis::KvBits:
        wp.kv_bits_effective = grid.values[i];
        if (grid.values[i] >= 16.0 && mode == PerfMode::Oaken) mp = PerfMode::Fp16;
        break;
      case SweepAxis::Memory: ap.memory = grid.memories[i]; break;
    }
    const GenerationResult g = run_generation(wp, ap, mp, pipelined);
    SweepRow row;
    row.mode = mp;
    row.batch = wp.batch;
    row.seq = wp.seq_input + wp.seq_output;
    row.kv_bits = resolve_precision(wp, mp).kv_bits;
    row.throughput = g.throughput;
    row.t_nonattn = g.breakdown.non_attention;
    row.t_attn = g.breakdown.attention;
    row.t_q = g.breakdown.quantize;
    row.t_dq = g.breakdown.dequantize;
    row.peak_mem = g.peak_memory;
    row.oom = g.oom;
    row.memory_label = ap.memory.label;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "mode,batch,seq,kv_bits,throughput,t_nonattn,t_attn,t_q,t_dq,peak_mem,oom_flag\n";
  for (const auto& r : rows) {
    os << to_string(r.mode) << ',' << r.batch << ',' << r.seq << ',' << r.kv_bits << ','
       << r.throughput << ',' << r.t_nonattn << ',' << r.t_attn << ',' << r.t_q << ',' << r.t_dq
       << ',' << r.peak_mem << ',' << (r.oom ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string sweep_to_text(const std::vector<SweepRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json j{{"record", "sweep_row"},   {"mode", std::string(to_string(r.mode))},
                             {"memory", r.memory_label}, {"batch", r.batch},
                             {"seq", r.seq},             {"kv_bits", r.kv_bits},
                             {"throughput", r.throughput}, {"t_nonattn", r.t_nonattn},
                             {"t_attn", r.t_attn},       {"t_q", r.t_q},
                             {"t_dq", r.t_dq},           {"peak_mem", r.peak_mem},
                             {"oom_flag", r.oom}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

AcceleratorConfig accelerator_preset(std::string_view name) {
  AcceleratorConfig a;
  if (name == "lpddr") {
    a.memory = {819.2e9, 256.0e9, "lpddr (representative)"};
  } else if (name == "hbm") {
    a.memory = {2039.0e9, 80.0e9, "hbm (representative)"};
  } else {
    throw ConfigError("unknown accelerator preset '" + std::string(name) + "' (lpddr, hbm)");
  }
  return a;
}

WorkloadConfig workload_preset(std::string_view name) {
  WorkloadConfig w;
  if (name == "llama2-7b") {
    w.model = "llama2-7b";
  } else if (name == "llama2-13b") {
    w.model = "llama2-13b";
    w.num_layers = 40;
    w.hidden_dim = 5120;
    w.num_heads = 40;
    w.num_kv_heads = 40;
    w.weight_bytes = 26.03e9;
  } else {
    throw ConfigError("unknown workload preset '" + std::string(name) + "' (llama2-7b, llama2-13b)");
  }
  return w;
}

}  // namespace oaken

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance suite. Prints one "[criterion N] PASS|FAIL" line per
// criterion and exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "oaken/encoding.hpp"
#include "oaken/error.hpp"
#include "oaken/eval.hpp"
#include "oaken/half.hpp"
#include "oaken/mmu.hpp"
#include "oaken/perf_model.hpp"
#include "oaken/profiler.hpp"
#include "oaken/property_suite.hpp"
#include "oaken/quant.hpp"
#include "oaken/synthetic.hpp"

using namespace oaken;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      detail << "violated: " << what;
      pass = false;
    }
  }
};

bool tied(std::span<const float> v, float x, Group g) {
  if (g == Group::Inner) {
    return std::count_if(v.begin(), v.end(), [&](float y) { return std::fabs(y) == std::fabs(x); }) > 1;
  }
  return std::count(v.begin(), v.end(), x) > 1;
}

// Grouping on a 32-layer, 4096-length, 1000-token trace.
void criterion_1(Outcome& out) {
  SyntheticSpec spec;
  spec.model_name = "acceptance-grouping";
  spec.num_layers = 32;
  spec.num_kv_heads = 32;
  spec.head_dim = 128;
  spec.num_tokens = 1000;
  spec.kinds = kind_bit(KvKind::Key);
  spec.layer_std_growth = 0.02;
  for (std::uint32_t c = 5; c < 4096; c += 29) spec.outlier_channels.push_back(c);
  spec.exception_rate = 0.01;
  const auto gen_start = Clock::now();
  const KvTrace trace = generate_synthetic_trace(spec, 2026);
  const double gen_time = seconds_since(gen_start);

  const GroupConfig g;
  const GroupCounts target = group_counts(4096, g);
  std::uint64_t vectors = 0, mismatches = 0, tie_mismatches = 0, count_violations = 0;
  std::uint64_t tied_count_vectors = 0;
  const auto start = Clock::now();
  const ThresholdProfile prof = profile(trace, g, RunPartition::contiguous(1000, 100));
  for (std::uint32_t layer = 0; layer < spec.num_layers; ++layer) {
    for (std::uint32_t t = 0; t < spec.num_tokens; ++t) {
      const auto v = trace.vector(layer, KvKind::Key, t);
      const ThresholdQuad q = extract_quad(v, g);
      const auto by_threshold = decompose(v, q);
      const auto by_topk = online_topk_grouping(v, g);
      std::size_t lo = 0, hi = 0, inner = 0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        lo += by_threshold[i] == GroupLabel::OuterLow;
        hi += by_threshold[i] == GroupLabel::OuterHigh;
        inner += group_of(by_threshold[i]) == Group::Inner;
        if (group_of(by_threshold[i]) == group_of(by_topk[i])) continue;
        const Group g_side = group_of(by_threshold[i]) == Group::Middle ? group_of(by_topk[i])
                                                                         : group_of(by_threshold[i]);
        if (tied(v, v[i], g_side)) {
          ++tie_mismatches;
        } else {
          ++mismatches;
        }
      }
      // A cut that falls on a repeated value moves every copy with it; that
      // many extra elements are allowed beyond the one-element tolerance.
      auto off = [](std::size_t a, std::size_t b) { return a > b ? a - b : b - a; };
      auto at_cut = [&](float t, bool magnitude) {
        return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](float x) {
          return (magnitude ? std::fabs(x) : x) == t;
        }));
      };
      const std::size_t d_lo = off(lo, target.outer_per_tail);
      const std::size_t d_hi = off(hi, target.outer_per_tail);
      const std::size_t d_in = off(inner, target.inner);
      if (d_lo > 1 || d_hi > 1 || d_in > 1) {
        ++tied_count_vectors;
        if (d_lo > 1 + at_cut(q.t_lo_outer, false) || d_hi > 1 + at_cut(q.t_hi_outer, false) ||
            d_in > 1 + at_cut(q.t_hi_inner, true)) {
          ++count_violations;
        }
      }
      ++vectors;
    }
  }
  const double elapsed = seconds_since(start);
  out.require(prof.quads.size() == spec.num_layers, "profile covers every layer");
  out.require(mismatches == 0, "threshold grouping equals topK except on ties");
  out.require(count_violations == 0, "group counts within one element per tail");
  out.require(elapsed < 10.0, "runtime below 10 s");
  out.detail << (out.pass ? "" : "; ") << vectors << " vectors, " << mismatches
             << " untied mismatches, " << tie_mismatches << " tied, " << count_violations
             << " count violations (" << tied_count_vectors << " vectors off by more than one only at tied cuts), " << elapsed << " s (trace generation " << gen_time << " s)";
}

PropertyResult run_one(Property p, std::uint64_t fuzz, std::uint64_t schedules = 0,
                       std::uint64_t bursts = 0) {
  PropertyConfig c;
  c.seed = 20261014;
  c.fuzz_tokens = fuzz;
  c.mmu_schedules = schedules;
  c.burst_cases = bursts;
  c.only = {p};
  return run_property_suite(c).results.at(0);
}

std::string describe(const PropertyResult& r) {
  std::ostringstream s;
  s << r.cases << " cases, " << r.checks << " checks, " << r.failures << " failures";
  if (r.min_failing_seed) s << ", minimal seed " << *r.min_failing_seed;
  for (const auto& m : r.messages) s << " | " << m;
  return s.str();
}

void criterion_2(Outcome& out) {
  const PropertyResult r = run_one(Property::RoundTrip, 100000);
  out.require(r.cases >= 100000, "at least 1e5 tokens");
  out.require(r.failures == 0, "zero round-trip violations");
  out.detail << (out.pass ? "" : "; ") << describe(r);
}

void criterion_3(Outcome& out) {
  const PropertyResult r = run_one(Property::Bijection, 100000);
  out.require(r.cases >= 100000, "at least 1e5 tokens");
  out.require(r.failures == 0, "decode(encode(q)) == q and exact size");

  // Per-outlier cost: 4 fused code bits + one 8-bit COO byte.
  bool cost_ok = true;
  for (std::size_t L : {64u, 128u, 4096u}) {
    for (std::size_t n = 0; n <= L; n += L / 16) {
      const std::size_t dense_part = 4 * (L - n) + 96;
      cost_ok = cost_ok && encoded_bits(L, n) - dense_part == 12 * n &&
                encoded_bits(L, n) == 4 * L + 8 * n + 96;
    }
  }
  out.require(cost_ok && kBitsPerOutlierMixed == 23, "12 bits per outlier vs 23 mixed");

  // Every eval run checks the encoded size of each token and prices the
  // mixed-precision baseline at 23 bits per outlier.
  SyntheticSpec spec;
  spec.num_layers = 2;
  spec.num_kv_heads = 2;
  spec.head_dim = 64;
  spec.num_tokens = 64;
  spec.outlier_channels = {3, 77, 100};
  spec.exception_rate = 0.01;
  const KvTrace trace = generate_synthetic_trace(spec, 5);
  const ErrorReport report = evaluate(trace, profile(trace, GroupConfig{}, RunPartition::contiguous(64, 8)));
  out.require(report.tokens_checked == 2u * 2 * 64 && report.size_mismatches == 0,
              "eval size check on every token");
  bool mixed_ok = true;
  for (const auto& row : report.rows) {
    if (row.method == Method::TopkMixed) {
      mixed_ok = mixed_ok && std::fabs(row.effective_bits - (4.0 + 19.0 * row.outlier_fraction)) < 1e-9;
    }
    if (row.method == Method::Oaken) {
      mixed_ok = mixed_ok && std::fabs(row.effective_bits - (4.0 + 8.0 * row.outlier_fraction)) < 1e-9;
    }
  }
  out.require(mixed_ok, "eval prices outliers at 12 vs 23 bits");
  out.detail << (out.pass ? "" : "; ") << describe(r) << "; eval checked " << report.tokens_checked
             << " tokens, " << report.size_mismatches << " size mismatches";
}

// Distinct half-exact values, so extracted thresholds hit the target counts.
std::vector<float> distinct_halves(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint16_t> pool;
  for (std::uint16_t bits = 0x2C00; bits < 0x4C00; ++bits) {  // [2^-4, 2^4)
    pool.push_back(bits);
    pool.push_back(static_cast<std::uint16_t>(bits | 0x8000));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = half_bits_to_float(pool[i]);
  return v;
}

void criterion_4(Outcome& out) {
  const GroupConfig g;
  const double formula = effective_bits({128, 12.8, false});
  out.require(formula == 4.8, "formula gives 4.8 bits at 10% outliers");
  out.require(1.0 - formula / 16.0 == 1.0 - 0.3, "70.0% reduction");

  // Real encoder: 6400 elements, 128 outer per tail and 384 inner = 640 outliers.
  const auto v = distinct_halves(6400, 4);
  const ThresholdQuad q = extract_quad(v, g);
  const EncodedToken e = encode(quantize_token({v, {}}, q, g), g);
  const std::size_t n = e.sparse.size();
  const double measured = static_cast<double>(8 * (e.dense.codes.size() + n)) / v.size();
  out.require(n == 640, "default ratios give exactly 10% outliers");
  out.require(measured == 4.8, "encoded token measures 4.8 bits excluding scales");
  out.require(e.bit_size() == encoded_bits(6400, n), "encoded size formula");

  const double with_scales = effective_bits({4096, 409.6, true});
  out.require(with_scales < 5.0, "below 5.0 bits with scales at L=4096");
  out.detail << (out.pass ? "" : "; ") << "formula " << formula << " bits, encoder " << measured
             << " bits (" << n << "/6400 outliers), with scales at L=4096 " << with_scales << " bits";
}

void criterion_5(Outcome& out) {
  auto spec_for = [](std::uint64_t seed) {
    SyntheticSpec s;
    s.model_name = "acceptance-error";
    s.num_layers = 4;
    s.num_kv_heads = 4;
    s.head_dim = 64;
    s.num_tokens = 64;
    s.layer_std_growth = 0.1;
    std::mt19937_64 rng(seed);
    std::set<std::uint32_t> ch;
    while (ch.size() < 6) ch.insert(static_cast<std::uint32_t>(rng() % 256));
    s.outlier_channels.assign(ch.begin(), ch.end());
    s.exception_rate = 0.01;
    return s;
  };
  const auto start = Clock::now();
  std::uint64_t wins = 0, cells = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const SyntheticSpec spec = spec_for(seed);
    const KvTrace held_out = generate_synthetic_trace(spec, seed);
    const KvTrace calibration = generate_synthetic_trace(spec, seed + 1000000);
    const ThresholdProfile prof = profile(calibration, GroupConfig{}, RunPartition::contiguous(64, 16));
    const ErrorReport r = evaluate(held_out, prof);
    std::map<std::pair<std::uint32_t, KvKind>, std::pair<double, double>> mse;
    for (const auto& row : r.rows) {
      if (row.method == Method::Oaken) mse[{row.layer, row.kind}].first = row.mse;
      if (row.method == Method::Uniform4) mse[{row.layer, row.kind}].second = row.mse;
    }
    for (const auto& [cell, m] : mse) {
      wins += m.first <= m.second;
      ++cells;
    }
  }
  const double elapsed = seconds_since(start);
  out.require(cells == 100u * 4 * 2, "all cells evaluated");
  out.require(wins * 100 >= cells * 95, "oaken MSE <= uniform4 in >= 95% of cells");
  out.require(elapsed < 120.0, "runtime below 2 min");
  out.detail << (out.pass ? "" : "; ") << wins << "/" << cells << " cells ("
             << 100.0 * wins / cells << "%), " << elapsed << " s";
}

void criterion_6(Outcome& out) {
  const PropertyResult fidelity = run_one(Property::MmuFidelity, 0, 10000, 0);
  const PropertyResult bursts = run_one(Property::BurstMath, 0, 0, 1000);
  out.require(fidelity.cases >= 10000 && fidelity.failures == 0, "read-after-write identity");
  out.require(bursts.failures == 0, "randomized closed-form bursts");

  // Directed closed form: every prefix of a contiguous single-page stream.
  const GroupConfig g;
  const ThresholdQuad wide{-100.0f, -0.0f, 0.0f, 100.0f};
  std::uint64_t directed = 0, directed_bad = 0;
  for (std::uint64_t page : {256u, 1024u, 4096u}) {
    for (std::uint64_t burst : {16u, 32u, 64u}) {
      Mmu mmu(MemoryConfig{page, burst, page * 4});
      const KvKey key{0, 0, KvKind::Value, 0};
      std::vector<float> v(128);
      const std::uint64_t per_token = 64 + 12;
      const std::uint32_t fit = static_cast<std::uint32_t>(page / per_token);
      for (std::uint32_t t = 0; t < fit; ++t) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>((i + t) % 7) - 2.5f;
        const auto tx = mmu.write_token(key, encode(quantize_token({v, {0, KvKind::Value, t}}, wide, g), g));
        directed_bad += tx.size() != 1 || tx[0].bursts != oracle::ceil_div(per_token, burst);
        const auto r = mmu.read_sequence(key, 0, t + 1);
        directed_bad += r.transactions.size() != 1 ||
                        r.transactions[0].bursts != oracle::ceil_div((t + 1) * per_token, burst);
        ++directed;
      }
    }
  }
  out.require(directed_bad == 0, "directed single-page transactions and bursts");
  out.detail << (out.pass ? "" : "; ") << "schedules: " << describe(fidelity) << "; bursts: "
             << describe(bursts) << "; directed " << directed << " reads, " << directed_bad << " mismatches";
}

void criterion_7(Outcome& out) {
  const WorkloadConfig w = workload_preset("llama2-7b");
  std::uint64_t points = 0, ratio_bad = 0, reduction_bad = 0;
  double min_red = 1.0, max_red = 0.0, max_ratio_err = 0.0;
  for (const char* mem : {"lpddr", "hbm"}) {
    const AcceleratorConfig a = accelerator_preset(mem);
    const SweepGrid grids[] = {
        {SweepAxis::Batch, {16, 32, 64, 128, 256}, {}},
        {SweepAxis::SeqLen, {1024, 2048, 4096, 8192, 16384, 32768}, {}},
    };
    for (const SweepGrid& grid : grids) {
      const auto fp16 = sweep(grid, w, a, PerfMode::Fp16, false);
      const auto oak = sweep(grid, w, a, PerfMode::Oaken, false);
      for (std::size_t i = 0; i < fp16.size(); ++i) {
        const double ratio = oak[i].t_attn / fp16[i].t_attn;
        max_ratio_err = std::max(max_ratio_err, std::fabs(ratio - 0.3));
        ratio_bad += std::fabs(ratio - 0.3) > 4 * std::numeric_limits<double>::epsilon() * 0.3;
        if (fp16[i].oom || oak[i].oom) continue;
        // Serial mode: every quantize/dequantize cycle counts against oaken.
        const double red = 1.0 - (oak[i].t_attn + oak[i].t_q + oak[i].t_dq) / fp16[i].t_attn;
        min_red = std::min(min_red, red);
        max_red = std::max(max_red, red);
        reduction_bad += red < 0.50 || red > 0.72;
        ++points;
      }
    }
  }
  out.require(ratio_bad == 0, "attention ratio == 4.8/16 to rounding");
  out.require(points > 0 && reduction_bad == 0, "attention reduction in [50%, 72%]");

  std::uint64_t overlap_cases = 0, overlap_bad = 0;
  for (double dq : {4096.0, 512.0, 16.0, 1.0}) {
    for (double qr : {4.0, 0.05}) {
      AcceleratorConfig a = accelerator_preset("lpddr");
      a.engines.dequantize_elements_per_cycle = dq;
      a.engines.quantize_elements_per_cycle = qr;
      for (std::uint32_t batch : {1u, 16u, 64u}) {
        WorkloadConfig wb = w;
        wb.batch = batch;
        for (std::uint64_t t : {0u, 1u, 8u, 512u, 4096u}) {
          const auto p = iteration_latency(wb, a, PerfMode::Oaken, true, t);
          const auto s = iteration_latency(wb, a, PerfMode::Oaken, false, t);
          const double engine = p.quantize + p.dequantize;
          if (engine <= p.attention) overlap_bad += p.exposed_overhead != 0.0;
          overlap_bad += p.exposed_overhead > s.exposed_overhead;
          ++overlap_cases;
        }
      }
    }
  }
  out.require(overlap_bad == 0, "pipelined overhead hidden when engine time <= DMA time");

  const auto g = run_generation(w, accelerator_preset("lpddr"), PerfMode::Oaken, false);
  const double fq = g.breakdown.quantize / g.total_time;
  const double fdq = g.breakdown.dequantize / g.total_time;
  out.require(fq <= 0.015 && fdq <= 0.035, "serial fractions <= 1.5% / 3.5% at batch 64");
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "attention ratio 0.3 within %.1e on all points; reduction %.1f%%..%.1f%% over %llu points; "
                "%llu overlap cases; batch-64 serial quantize %.2f%%, dequantize %.2f%%",
                max_ratio_err, 100 * min_red, 100 * max_red, static_cast<unsigned long long>(points),
                static_cast<unsigned long long>(overlap_cases), 100 * fq, 100 * fdq);
  out.detail << (out.pass ? "" : "; ") << buf;
}

void criterion_8(Outcome& out) {
  const WorkloadConfig base = workload_preset("llama2-7b");
  const double per_request_token = static_cast<double>(base.num_layers) * 2 * base.num_kv_heads *
                                   base.head_dim * 2.0;  // fp16 bytes
  std::uint64_t trials = 0, bad = 0;

  // Batch crossing at fixed length: largest batch that fits is closed form.
  for (double capacity : {24e9, 32e9, 48e9, 80e9}) {
    AcceleratorConfig a = accelerator_preset("hbm");
    a.memory.capacity = capacity;
    const long long total = base.seq_input + base.seq_output;
    const long long bstar = oracle::max_batch(capacity, base.weight_bytes, per_request_token, total);
    for (long long b : {bstar - 1, bstar, bstar + 1}) {
      if (b < 1) continue;
      WorkloadConfig w = base;
      w.batch = static_cast<std::uint32_t>(b);
      const bool oom = run_generation(w, a, PerfMode::Fp16, true).oom;
      bad += oom != (b > bstar);
      ++trials;
    }
  }

  // Sequence crossing: first failing token index matches the closed form.
  for (std::uint32_t batch : {8u, 32u, 64u}) {
    WorkloadConfig w = base;
    w.batch = batch;
    w.seq_input = 2048;
    w.seq_output = 6144;
    const double p = per_request_token * batch;
    for (double room : {2047.5, 2500.25, 4100.5, 8000.75}) {
      AcceleratorConfig a = accelerator_preset("lpddr");
      a.memory.capacity = w.weight_bytes + p * (room + 1);
      const auto g = run_generation(w, a, PerfMode::Fp16, true);
      const long long expect = oracle::oom_token(a.memory.capacity, w.weight_bytes, p, 2048, 6144);
      bad += !g.oom || static_cast<long long>(g.oom_token) != expect || g.throughput != 0.0;
      ++trials;
    }
  }
  out.require(bad == 0, "OOM flag and token match the closed form");
  out.detail << (out.pass ? "" : "; ") << trials << " capacity configs, " << bad << " mismatches";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"grouping fidelity", criterion_1},   {"round-trip bound", criterion_2},
      {"encoding bijection and cost", criterion_3}, {"compression", criterion_4},
      {"error dominance", criterion_5},     {"mmu fidelity and burst math", criterion_6},
      {"performance model shape", criterion_7}, {"oom crossing", criterion_8},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    const auto start = Clock::now();
    try {
      criteria[i].second(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " exception: " << e.what();
    }
    std::printf("[criterion %zu] %s %s (%.1f s): %s\n", i + 1, out.pass ? "PASS" : "FAIL",
                criteria[i].first, seconds_since(start), out.detail.str().c_str());
    std::fflush(stdout);
    failed += !out.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

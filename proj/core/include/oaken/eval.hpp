// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Reconstruction-error evaluation of oaken against two baselines:
//   uniform4    per-token min/max 4-bit over the whole vector
//   topk_mixed  online top-k outliers kept exact (23 bits per entry),
//               remaining values per-token 4-bit

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oaken/kv_model.hpp"
#include "oaken/profiler.hpp"

namespace oaken {

enum class Method : std::uint8_t { Oaken, Uniform4, TopkMixed };
std::string_view to_string(Method method);

struct ErrorRow {
  Method method = Method::Oaken;
  std::uint32_t layer = 0;
  KvKind kind = KvKind::Key;
  double mse = 0.0;
  double max_abs_err = 0.0;
  double max_abs_err_outliers = 0.0;  // over positions the method treats as outliers
  double sqnr_db = 0.0;
  double outlier_fraction = 0.0;
  double effective_bits = 0.0;              // excluding scale records
  double effective_bits_with_scales = 0.0;
  double toy_attention_delta = 0.0;         // layer-level, see toy_attention_delta()
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
  std::uint64_t tokens_checked = 0;    // oaken tokens whose encoded size was verified
  std::uint64_t size_mismatches = 0;   // tokens whose size differs from 4L + 8n + 96
  std::string config_digest;
};

struct EvalOptions {
  GroupConfig group;
  std::uint64_t toy_seed = 7;
  bool toy_attention = true;
};

/// Per-element reconstruction for each method; `outlier` marks positions a
/// method stores as outliers (empty for uniform4).
struct Reconstruction {
  std::vector<float> values;
  std::vector<bool> outlier;
  double stored_bits = 0.0;  // excluding scale records
  double scale_bits = 0.0;
  bool size_matches = true;  // oaken: encoded size equals 4L + 8n + 96
};

Reconstruction reconstruct_uniform4(std::span<const float> x);
Reconstruction reconstruct_topk_mixed(std::span<const float> x, const GroupConfig& config);
/// quantize -> encode -> decode -> dequantize.
Reconstruction reconstruct_oaken(const KvView& x, const ThresholdQuad& quad,
                                 const GroupConfig& config);

/// Signal-to-quantization-noise ratio in dB, floored at 1e-30 on both terms.
double sqnr_db(double signal_energy, double noise_energy);

/// Max |softmax(qK^T/sqrt(d)) - softmax(qK'^T/sqrt(d))| over 8 heads of 64
/// dims and 128 keys. Row r of `keys` / `approx` is token r; elements are read
/// cyclically so any vector length and token count works.
double toy_attention_delta(std::span<const float> keys, std::span<const float> approx,
                           std::size_t vector_len, std::size_t num_tokens, std::uint64_t seed);

/// Throws ConfigError when the profile does not cover the trace.
void check_profile_matches(const KvTrace& trace, const ThresholdProfile& profile);

ErrorReport evaluate(const KvTrace& trace, const ThresholdProfile& profile,
                     const EvalOptions& options = {});

/// Header: method,layer,kind,mse,max_abs_err,max_abs_err_outliers,sqnr_db,
/// outlier_fraction,effective_bits,effective_bits_with_scales,toy_attention_delta
std::string report_to_csv(const ErrorReport& report);
std::string report_to_text(const ErrorReport& report);

}  // namespace oaken

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "oaken/encoding.hpp"
#include "oaken/error.hpp"
#include "oaken/half.hpp"
#include "oaken/quant.hpp"

namespace oaken {
namespace {

constexpr std::size_t kToyHeads = 8;
constexpr std::size_t kToyDim = 64;
constexpr std::size_t kToyTokens = 128;

double level(double offset, double sigma) {
  return std::clamp(std::round(offset * sigma), 0.0, static_cast<double>(kCodeLevels));
}

// Per-token 4-bit over the selected elements, min/max stored as half.
void uniform_into(std::span<const float> x, const std::vector<bool>* skip, std::vector<float>& out) {
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (skip && (*skip)[i]) continue;
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
  }
  if (lo > hi) return;
  lo = round_to_half(lo, HalfRounding::TowardNegative);
  hi = round_to_half(hi, HalfRounding::TowardPositive);
  const GroupScale s = GroupScale::from_range(lo, hi);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (skip && (*skip)[i]) continue;
    if (s.degenerate()) {
      out[i] = s.min;
      continue;
    }
    const double code = level(static_cast<double>(x[i]) - s.min, s.sigma);
    out[i] = static_cast<float>(code / s.sigma + s.min);
  }
}

std::vector<double> softmax_rows(std::span<const float> keys, std::size_t vector_len,
                                 std::size_t num_tokens, const std::vector<double>& queries) {
  std::vector<double> probs(kToyHeads * kToyTokens);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kToyDim));
  for (std::size_t h = 0; h < kToyHeads; ++h) {
    double* row = probs.data() + h * kToyTokens;
    for (std::size_t t = 0; t < kToyTokens; ++t) {
      const std::size_t token = t % num_tokens;
      double dot = 0.0;
      for (std::size_t d = 0; d < kToyDim; ++d) {
        const std::size_t elem = (h * kToyDim + d) % vector_len;
        dot += queries[h * kToyDim + d] * keys[token * vector_len + elem];
      }
      row[t] = dot * scale;
    }
    const double peak = *std::max_element(row, row + kToyTokens);
    double sum = 0.0;
    for (std::size_t t = 0; t < kToyTokens; ++t) sum += row[t] = std::exp(row[t] - peak);
    for (std::size_t t = 0; t < kToyTokens; ++t) row[t] /= sum;
  }
  return probs;
}

struct Accumulator {
  double signal = 0.0;
  double noise = 0.0;
  double max_err = 0.0;
  double max_err_outlier = 0.0;
  double outliers = 0.0;
  double stored_bits = 0.0;
  double scale_bits = 0.0;
  std::size_t elements = 0;

  void add(std::span<const float> x, const Reconstruction& r) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = std::fabs(static_cast<double>(r.values[i]) - x[i]);
      signal += static_cast<double>(x[i]) * x[i];
      noise += e * e;
      max_err = std::max(max_err, e);
      if (!r.outlier.empty() && r.outlier[i]) {
        outliers += 1.0;
        max_err_outlier = std::max(max_err_outlier, e);
      }
    }
    stored_bits += r.stored_bits;
    scale_bits += r.scale_bits;
    elements += x.size();
  }
};

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Oaken: return "oaken";
    case Method::Uniform4: return "uniform4";
    case Method::TopkMixed: return "topk_mixed";
  }
  return "?";
}

Reconstruction reconstruct_uniform4(std::span<const float> x) {
  Reconstruction r;
  r.values.assign(x.size(), 0.0f);
  uniform_into(x, nullptr, r.values);
  r.stored_bits = 4.0 * static_cast<double>(x.size());
  r.scale_bits = 32.0;
  return r;
}

Reconstruction reconstruct_topk_mixed(std::span<const float> x, const GroupConfig& config) {
  Reconstruction r;
  const auto labels = online_topk_grouping(x, config);
  r.outlier.resize(x.size());
  r.values.assign(x.begin(), x.end());
  std::size_t n_out = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.outlier[i] = is_outlier(labels[i]);
    n_out += r.outlier[i] ? 1 : 0;
  }
  uniform_into(x, &r.outlier, r.values);
  r.stored_bits = 4.0 * static_cast<double>(x.size() - n_out) +
                  static_cast<double>(kBitsPerOutlierMixed) * static_cast<double>(n_out);
  r.scale_bits = 32.0;
  return r;
}

Reconstruction reconstruct_oaken(const KvView& x, const ThresholdQuad& quad,
                                 const GroupConfig& config) {
  const QuantizedToken q = quantize_token(x, quad, config);
  const EncodedToken e = encode(q, config);
  const std::size_t n_out = e.sparse.size();
  const QuantizedToken back = decode(e, config);
  Reconstruction r;
  r.size_matches = e.bit_size() == encoded_bits(x.values.size(), n_out) &&
                   e.dense_bytes().size() + e.sparse_bytes().size() == e.bit_size() / 8;
  r.values = dequantize_token(back, quad);
  r.outlier.resize(back.size());
  for (std::size_t i = 0; i < back.size(); ++i) r.outlier[i] = is_outlier(back.labels[i]);
  r.stored_bits = static_cast<double>(e.bit_size() - kScaleRecordBits);
  r.scale_bits = static_cast<double>(kScaleRecordBits);
  return r;
}

double sqnr_db(double signal_energy, double noise_energy) {
  return 10.0 * std::log10(std::max(signal_energy, 1e-30) / std::max(noise_energy, 1e-30));
}

double toy_attention_delta(std::span<const float> keys, std::span<const float> approx,
                           std::size_t vector_len, std::size_t num_tokens, std::uint64_t seed) {
  if (vector_len == 0 || num_tokens == 0 || keys.size() < vector_len * num_tokens ||
      approx.size() < vector_len * num_tokens) {
    throw ContractError("toy attention needs num_tokens x vector_len keys");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> queries(kToyHeads * kToyDim);
  for (auto& q : queries) q = normal(rng);
  const auto p = softmax_rows(keys, vector_len, num_tokens, queries);
  const auto p_hat = softmax_rows(approx, vector_len, num_tokens, queries);
  double delta = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) delta = std::max(delta, std::fabs(p[i] - p_hat[i]));
  return delta;
}

void check_profile_matches(const KvTrace& trace, const ThresholdProfile& profile) {
  for (std::uint32_t layer = 0; layer < trace.meta().num_layers; ++layer) {
    for (KvKind kind : trace.kinds()) {
      if (!profile.quads.count({layer, kind})) {
        throw ConfigError("profile has no thresholds for layer " + std::to_string(layer) + " " +
                          std::string(to_string(kind)));
      }
    }
  }
  for (const auto& [key, quad] : profile.quads) {
    if (key.first >= trace.meta().num_layers || !trace.has_kind(key.second)) {
      throw ConfigError("profile entry for layer " + std::to_string(key.first) + " " +
                        std::string(to_string(key.second)) + " has no counterpart in the trace");
    }
  }
  const std::size_t seg = profile.provenance.group_config.segment_len;
  if (trace.vector_len() % seg != 0) {
    throw ConfigError("trace vector length " + std::to_string(trace.vector_len()) +
                      " is not a multiple of the profile segment length " + std::to_string(seg));
  }
}

ErrorReport evaluate(const KvTrace& trace, const ThresholdProfile& profile,
                     const EvalOptions& options) {
  check_profile_matches(trace, profile);
  options.group.validate();
  ErrorReport report;
  const std::size_t len = trace.vector_len();
  const std::uint32_t tokens = trace.num_tokens();
  constexpr Method kMethods[] = {Method::Oaken, Method::Uniform4, Method::TopkMixed};

  for (std::uint32_t layer = 0; layer < trace.meta().num_layers; ++layer) {
    const KvKind toy_kind = trace.has_kind(KvKind::Key) ? KvKind::Key : KvKind::Value;
    std::vector<ErrorRow> layer_rows;
    double toy[3] = {0.0, 0.0, 0.0};
    for (KvKind kind : trace.kinds()) {
      const ThresholdQuad& quad = profile.at(layer, kind);
      Accumulator acc[3];
      std::vector<std::vector<float>> approx(3);
      const bool keep = options.toy_attention && kind == toy_kind;
      if (keep) {
        for (auto& a : approx) a.reserve(static_cast<std::size_t>(tokens) * len);
      }
      for (std::uint32_t t = 0; t < tokens; ++t) {
        const KvView view = trace.view(layer, kind, t);
        Reconstruction r[3] = {reconstruct_oaken(view, quad, options.group),
                               reconstruct_uniform4(view.values),
                               reconstruct_topk_mixed(view.values, options.group)};
        ++report.tokens_checked;
        if (!r[0].size_matches) ++report.size_mismatches;
        for (int m = 0; m < 3; ++m) {
          acc[m].add(view.values, r[m]);
          if (keep) approx[m].insert(approx[m].end(), r[m].values.begin(), r[m].values.end());
        }
      }
      if (keep) {
        const auto original = trace.layer_values(layer, kind);
        for (int m = 0; m < 3; ++m) {
          toy[m] = toy_attention_delta(original, approx[m], len, tokens, options.toy_seed + layer);
        }
      }
      for (int m = 0; m < 3; ++m) {
        const auto n = static_cast<double>(std::max<std::size_t>(acc[m].elements, 1));
        ErrorRow row;
        row.method = kMethods[m];
        row.layer = layer;
        row.kind = kind;
        row.mse = acc[m].noise / n;
        row.max_abs_err = acc[m].max_err;
        row.max_abs_err_outliers = acc[m].max_err_outlier;
        row.sqnr_db = sqnr_db(acc[m].signal, acc[m].noise);
        row.outlier_fraction = acc[m].outliers / n;
        row.effective_bits = acc[m].stored_bits / n;
        row.effective_bits_with_scales = (acc[m].stored_bits + acc[m].scale_bits) / n;
        layer_rows.push_back(row);
      }
    }
    for (auto& row : layer_rows) row.toy_attention_delta = toy[static_cast<int>(row.method)];
    report.rows.insert(report.rows.end(), layer_rows.begin(), layer_rows.end());
  }
  return report;
}

std::string report_to_csv(const ErrorReport& report) {
  std::ostringstream os;
  os.precision(10);
  os << "method,layer,kind,mse,max_abs_err,max_abs_err_outliers,sqnr_db,outlier_fraction,"
        "effective_bits,effective_bits_with_scales,toy_attention_delta\n";
  for (const auto& r : report.rows) {
    os << to_string(r.method) << ',' << r.layer << ',' << to_string(r.kind) << ',' << r.mse << ','
       << r.max_abs_err << ',' << r.max_abs_err_outliers << ',' << r.sqnr_db << ','
       << r.outlier_fraction << ',' << r.effective_bits << ',' << r.effective_bits_with_scales
       << ',' << r.toy_attention_delta << '\n';
  }
  return os.str();
}

std::string report_to_text(const ErrorReport& report) {
  nlohmann::ordered_json j;
  j["format"] = "oaken-error-report";
  j["config_digest"] = report.config_digest;
  j["tokens_checked"] = report.tokens_checked;
  j["size_mismatches"] = report.size_mismatches;
  j["bits_per_outlier"] = {{"fused", kBitsPerOutlierFused}, {"mixed", kBitsPerOutlierMixed}};
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"method", std::string(to_string(r.method))},
                    {"layer", r.layer},
                    {"kind", std::string(to_string(r.kind))},
                    {"mse", r.mse},
                    {"max_abs_err", r.max_abs_err},
                    {"max_abs_err_outliers", r.max_abs_err_outliers},
                    {"sqnr_db", r.sqnr_db},
                    {"outlier_fraction", r.outlier_fraction},
                    {"effective_bits", r.effective_bits},
                    {"effective_bits_with_scales", r.effective_bits_with_scales},
                    {"toy_attention_delta", r.toy_attention_delta}});
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace oaken

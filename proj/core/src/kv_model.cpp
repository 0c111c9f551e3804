// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/kv_model.hpp"

#include <cmath>

#include "oaken/error.hpp"
#include "oaken/half.hpp"

namespace oaken {

std::string_view to_string(KvKind kind) { return kind == KvKind::Key ? "key" : "value"; }

KvKind parse_kind(std::string_view text) {
  if (text == "key" || text == "k") return KvKind::Key;
  if (text == "value" || text == "v") return KvKind::Value;
  throw ConfigError("unknown KV kind '" + std::string(text) + "' (expected key or value)");
}

namespace {

void round_payload(std::vector<float>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ConfigError("non-finite KV value at element " + std::to_string(i));
    }
    values[i] = round_to_half(values[i]);
    if (!std::isfinite(values[i])) {
      throw ConfigError("KV value at element " + std::to_string(i) +
                        " overflows half precision");
    }
  }
}

}  // namespace

KvVector KvVector::from_values(std::vector<float> values, TokenOrigin origin,
                               std::size_t segment_len) {
  if (values.empty()) throw ConfigError("KV vector must not be empty");
  if (segment_len == 0 || values.size() % segment_len != 0) {
    throw ConfigError("KV vector length " + std::to_string(values.size()) +
                      " is not a multiple of segment length " + std::to_string(segment_len));
  }
  round_payload(values);
  return KvVector(std::move(values), origin);
}

void TraceMeta::validate() const {
  if (num_layers == 0) throw ConfigError("trace must have at least one layer");
  if (vector_len == 0) throw ConfigError("trace vector_len must be positive");
  if (static_cast<std::uint64_t>(num_kv_heads) * head_dim != vector_len) {
    throw ConfigError("vector_len " + std::to_string(vector_len) + " != num_kv_heads " +
                      std::to_string(num_kv_heads) + " x head_dim " + std::to_string(head_dim));
  }
}

KvTrace::KvTrace(TraceMeta meta, std::uint32_t num_tokens, KindMask kinds,
                 std::vector<float> payload)
    : meta_(std::move(meta)), num_tokens_(num_tokens), kinds_(kinds), payload_(std::move(payload)) {
  meta_.validate();
  if (kinds_ == 0 || (kinds_ & ~kAllKinds) != 0) {
    throw ConfigError("invalid kind mask " + std::to_string(kinds_));
  }
  const std::size_t num_kinds = kinds_ == kAllKinds ? 2 : 1;
  const std::size_t expected =
      static_cast<std::size_t>(meta_.num_layers) * num_kinds * num_tokens_ * meta_.vector_len;
  if (payload_.size() != expected) {
    throw ConfigError("trace payload has " + std::to_string(payload_.size()) +
                      " values, metadata implies " + std::to_string(expected));
  }
  round_payload(payload_);
}

std::vector<KvKind> KvTrace::kinds() const {
  std::vector<KvKind> out;
  if (has_kind(KvKind::Key)) out.push_back(KvKind::Key);
  if (has_kind(KvKind::Value)) out.push_back(KvKind::Value);
  return out;
}

std::size_t KvTrace::kind_slot(KvKind kind) const {
  if (!has_kind(kind)) {
    throw LookupError("trace has no " + std::string(to_string(kind)) + " vectors");
  }
  return (kind == KvKind::Value && has_kind(KvKind::Key)) ? 1 : 0;
}

std::size_t KvTrace::offset(std::uint32_t layer, KvKind kind, std::uint32_t token) const {
  if (layer >= meta_.num_layers) throw LookupError("layer " + std::to_string(layer) + " out of range");
  if (token > num_tokens_) throw LookupError("token " + std::to_string(token) + " out of range");
  const std::size_t num_kinds = kinds_ == kAllKinds ? 2 : 1;
  const std::size_t slot = kind_slot(kind);
  return ((static_cast<std::size_t>(layer) * num_kinds + slot) * num_tokens_ + token) *
         meta_.vector_len;
}

std::span<const float> KvTrace::vector(std::uint32_t layer, KvKind kind,
                                       std::uint32_t token) const {
  if (token >= num_tokens_) throw LookupError("token " + std::to_string(token) + " out of range");
  return std::span<const float>(payload_).subspan(offset(layer, kind, token), meta_.vector_len);
}

KvView KvTrace::view(std::uint32_t layer, KvKind kind, std::uint32_t token) const {
  return {vector(layer, kind, token), TokenOrigin{layer, kind, token}};
}

std::span<const float> KvTrace::layer_values(std::uint32_t layer, KvKind kind) const {
  return std::span<const float>(payload_).subspan(
      offset(layer, kind, 0), static_cast<std::size_t>(num_tokens_) * meta_.vector_len);
}

void GroupConfig::validate() const {
  for (double r : {ratio_outer, ratio_middle, ratio_inner}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("group ratios must lie in [0, 1]");
  }
  const double sum = ratio_outer + ratio_middle + ratio_inner;
  if (std::fabs(sum - 1.0) > kRatioTolerance) {
    throw ConfigError("group ratios sum to " + std::to_string(sum) + ", expected 1");
  }
  if (bits_middle != 4 || bits_outlier != 5) {
    throw ConfigError("only 4-bit middle and 5-bit (sign + 4) outlier codes are supported");
  }
  if (segment_len == 0 || segment_len > 64) {
    throw ConfigError("segment_len must be in [1, 64] to fit the 6-bit sparse index");
  }
}

}  // namespace oaken

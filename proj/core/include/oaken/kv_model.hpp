// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Core KV-cache domain types: per-token vectors, the trace container, and
// the three-group configuration shared by profiling and quantization.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oaken {

enum class KvKind : std::uint8_t { Key = 0, Value = 1 };

std::string_view to_string(KvKind kind);
KvKind parse_kind(std::string_view text);

/// Bitmask of kinds present in a trace: bit 0 = key, bit 1 = value.
using KindMask = std::uint8_t;
inline constexpr KindMask kKeyBit = 0x1;
inline constexpr KindMask kValueBit = 0x2;
inline constexpr KindMask kAllKinds = kKeyBit | kValueBit;

inline constexpr KindMask kind_bit(KvKind kind) {
  return kind == KvKind::Key ? kKeyBit : kValueBit;
}

inline constexpr std::size_t kDefaultSegmentLen = 64;

struct TokenOrigin {
  std::uint32_t layer = 0;
  KvKind kind = KvKind::Key;
  std::uint32_t token = 0;

  bool operator==(const TokenOrigin&) const = default;
};

/// Non-owning view of one token vector. Quantization operates on views so
/// that trace payloads are never copied.
struct KvView {
  std::span<const float> values;
  TokenOrigin origin;
};

/// Owning per-token vector. Values are rounded to binary16 on construction.
class KvVector {
 public:
  /// Throws ConfigError when the length is zero or not a multiple of
  /// `segment_len`, or when a value is not finite.
  static KvVector from_values(std::vector<float> values, TokenOrigin origin,
                              std::size_t segment_len = kDefaultSegmentLen);

  std::span<const float> values() const { return values_; }
  const TokenOrigin& origin() const { return origin_; }
  std::size_t size() const { return values_.size(); }
  KvView view() const { return {values_, origin_}; }

  bool operator==(const KvVector&) const = default;

 private:
  KvVector(std::vector<float> values, TokenOrigin origin)
      : values_(std::move(values)), origin_(origin) {}

  std::vector<float> values_;
  TokenOrigin origin_;
};

struct TraceMeta {
  std::string model_name = "synthetic";
  std::uint32_t num_layers = 0;
  std::uint32_t vector_len = 0;
  std::uint32_t num_kv_heads = 0;
  std::uint32_t head_dim = 0;

  void validate() const;
  bool operator==(const TraceMeta&) const = default;
};

/// Captured or synthesized per-layer, per-token KV vectors.
///
/// Payload layout is [layer][kind][token][element], with only the kinds in
/// the mask present (key before value). Tokens of a (layer, kind) are
/// contiguous so a whole layer can be profiled as one span.
class KvTrace {
 public:
  /// Takes ownership of `payload`. Every value is rounded to binary16;
  /// non-finite values are rejected with ConfigError.
  KvTrace(TraceMeta meta, std::uint32_t num_tokens, KindMask kinds, std::vector<float> payload);

  const TraceMeta& meta() const { return meta_; }
  std::uint32_t num_tokens() const { return num_tokens_; }
  KindMask kind_mask() const { return kinds_; }
  bool has_kind(KvKind kind) const { return (kinds_ & kind_bit(kind)) != 0; }
  std::vector<KvKind> kinds() const;
  std::size_t vector_len() const { return meta_.vector_len; }

  std::span<const float> vector(std::uint32_t layer, KvKind kind, std::uint32_t token) const;
  KvView view(std::uint32_t layer, KvKind kind, std::uint32_t token) const;
  /// All tokens of one (layer, kind), contiguous.
  std::span<const float> layer_values(std::uint32_t layer, KvKind kind) const;
  std::span<const float> payload() const { return payload_; }

  bool operator==(const KvTrace&) const = default;

 private:
  std::size_t kind_slot(KvKind kind) const;
  std::size_t offset(std::uint32_t layer, KvKind kind, std::uint32_t token) const;

  TraceMeta meta_;
  std::uint32_t num_tokens_;
  KindMask kinds_;
  std::vector<float> payload_;
};

/// Ratios and bit widths of the outer / middle / inner groups.
struct GroupConfig {
  double ratio_outer = 0.04;
  double ratio_middle = 0.90;
  double ratio_inner = 0.06;
  unsigned bits_middle = 4;
  unsigned bits_outlier = 5;  // 1 sign + 4 magnitude bits
  std::size_t segment_len = kDefaultSegmentLen;

  static constexpr double kRatioTolerance = 1e-9;

  /// Throws ConfigError on ratios that are negative or do not sum to 1, on
  /// bit widths other than 4/5, or on segment lengths outside [1, 64].
  void validate() const;
  bool operator==(const GroupConfig&) const = default;
};

}  // namespace oaken

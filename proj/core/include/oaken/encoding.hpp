// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Fused dense-and-sparse token encoding.
//
// Byte layout of one encoded token of L elements with n outliers:
//
//   dense codes   L/2 bytes   element 2k in the low nibble of byte k, element
//                             2k+1 in the high nibble. Middle elements carry
//                             their 4-bit code; outlier elements carry the 4
//                             magnitude bits of their sign-magnitude code.
//   scale record  12 bytes    six little-endian binary16 values:
//                             middle.min, middle.max, inner.min, inner.max,
//                             outer.min, outer.max
//   sparse        n bytes     one entry per outlier, ordered by (segment,
//                             index). Bits 7..2 index within the segment,
//                             bit 1 group (0 inner, 1 outer), bit 0 sign
//                             (0 positive, 1 negative).
//
// Segments are `segment_len` (<= 64) consecutive elements. The per-segment
// entry counts are transfer-size metadata kept beside the stream (the MMU's
// sparse table), not part of it. Total size is 4L + 8n + 96 bits.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oaken/kv_model.hpp"
#include "oaken/quant.hpp"

namespace oaken {

inline constexpr std::size_t kScaleRecordBytes = 12;
inline constexpr std::size_t kScaleRecordBits = kScaleRecordBytes * 8;
inline constexpr std::size_t kBitsPerOutlierFused = 4 + 8;
/// FP16 value + 6-bit index + 1 group bit, the mixed-precision alternative.
inline constexpr std::size_t kBitsPerOutlierMixed = 16 + 6 + 1;

class SparseEntry {
 public:
  SparseEntry() = default;
  static SparseEntry make(std::uint8_t index, bool outer, bool negative);
  static SparseEntry from_byte(std::uint8_t byte) { return SparseEntry(byte); }

  std::uint8_t byte() const { return byte_; }
  std::uint8_t index() const { return static_cast<std::uint8_t>(byte_ >> 2); }
  bool outer() const { return (byte_ & 0x2) != 0; }
  bool negative() const { return (byte_ & 0x1) != 0; }

  bool operator==(const SparseEntry&) const = default;

 private:
  explicit SparseEntry(std::uint8_t byte) : byte_(byte) {}
  std::uint8_t byte_ = 0;
};

struct DenseBlock {
  std::vector<std::uint8_t> codes;  // vector_len / 2 bytes
  std::array<std::uint8_t, kScaleRecordBytes> scales{};

  std::size_t byte_size() const { return codes.size() + scales.size(); }
  bool operator==(const DenseBlock&) const = default;
};

struct EncodedToken {
  DenseBlock dense;
  std::vector<SparseEntry> sparse;
  std::vector<std::uint8_t> sparse_counts;  // entries per segment
  TokenOrigin origin;

  std::size_t vector_len() const { return dense.codes.size() * 2; }
  std::size_t bit_size() const { return dense.byte_size() * 8 + sparse.size() * 8; }
  /// Codes followed by the scale record.
  std::vector<std::uint8_t> dense_bytes() const;
  std::vector<std::uint8_t> sparse_bytes() const;

  bool operator==(const EncodedToken&) const = default;
};

/// Closed-form size of an encoded token: 4L + 8n + 96 bits.
constexpr std::size_t encoded_bits(std::size_t vector_len, std::size_t num_outliers) {
  return 4 * vector_len + 8 * num_outliers + kScaleRecordBits;
}

/// Throws ConfigError when the token length is odd or not a multiple of the
/// segment length.
EncodedToken encode(const QuantizedToken& q, const GroupConfig& config);

/// Throws FormatError on unsorted or duplicate indices, indices beyond the
/// segment, or counts that disagree with the entry list.
QuantizedToken decode(const EncodedToken& e, const GroupConfig& config);

/// Rebuilds an EncodedToken from raw dense and sparse bytes plus the
/// per-segment counts, e.g. after reading it back from memory.
EncodedToken assemble_token(std::span<const std::uint8_t> dense_bytes,
                            std::span<const std::uint8_t> sparse_bytes,
                            std::span<const std::uint8_t> sparse_counts, TokenOrigin origin);

struct BitStats {
  std::size_t vector_len = 0;
  double num_outliers = 0.0;  // may be an expected (fractional) count
  bool include_scales = false;
};

/// Bits per element: (4L + 8n + [96]) / L.
double effective_bits(const BitStats& stats);

/// Human-readable, bit-by-bit dump of the encoded layout.
std::string dump_token(const EncodedToken& e, const GroupConfig& config);

}  // namespace oaken

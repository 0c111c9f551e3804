// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/encoding.hpp"

#include <bitset>
#include <iomanip>
#include <sstream>

#include "oaken/error.hpp"
#include "oaken/half.hpp"

namespace oaken {
namespace {

void put_half(std::uint8_t* dst, float v) {
  const auto bits = float_to_half_bits(v);
  dst[0] = static_cast<std::uint8_t>(bits);
  dst[1] = static_cast<std::uint8_t>(bits >> 8);
}

float get_half(const std::uint8_t* src) {
  return half_bits_to_float(static_cast<std::uint16_t>(src[0] | (src[1] << 8)));
}

void check_half(float v, const char* what) {
  if (!is_half_exact(v)) {
    throw ContractError(std::string(what) + " is not representable in half precision");
  }
}

}  // namespace

SparseEntry SparseEntry::make(std::uint8_t index, bool outer, bool negative) {
  if (index >= 64) throw ContractError("sparse index " + std::to_string(index) + " exceeds 6 bits");
  return SparseEntry(static_cast<std::uint8_t>((index << 2) | (outer ? 0x2 : 0) | (negative ? 0x1 : 0)));
}

std::vector<std::uint8_t> EncodedToken::dense_bytes() const {
  std::vector<std::uint8_t> out(dense.codes);
  out.insert(out.end(), dense.scales.begin(), dense.scales.end());
  return out;
}

std::vector<std::uint8_t> EncodedToken::sparse_bytes() const {
  std::vector<std::uint8_t> out(sparse.size());
  for (std::size_t i = 0; i < sparse.size(); ++i) out[i] = sparse[i].byte();
  return out;
}

EncodedToken encode(const QuantizedToken& q, const GroupConfig& config) {
  config.validate();
  q.validate();
  const std::size_t n = q.size();
  const std::size_t seg = config.segment_len;
  if (n == 0 || n % 2 != 0 || n % seg != 0) {
    throw ConfigError("token length " + std::to_string(n) + " must be even and a multiple of " +
                      std::to_string(seg));
  }
  EncodedToken e;
  e.origin = q.origin;
  e.dense.codes.assign(n / 2, 0);
  for (std::size_t i = 0; i < n; ++i) {
    e.dense.codes[i / 2] |= static_cast<std::uint8_t>((q.codes[i] & 0xf) << ((i & 1) * 4));
  }
  const float scale_values[6] = {q.middle.min, q.middle.max, q.inner.min,
                                 q.inner.max,  q.outer.min,  q.outer.max};
  for (int k = 0; k < 6; ++k) {
    check_half(scale_values[k], "scale bound");
    put_half(e.dense.scales.data() + 2 * k, scale_values[k]);
  }
  e.sparse_counts.assign(n / seg, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_outlier(q.labels[i])) continue;
    const std::size_t segment = i / seg;
    if (e.sparse_counts[segment] >= seg) throw ContractError("sparse count overflow in segment");
    ++e.sparse_counts[segment];
    e.sparse.push_back(SparseEntry::make(static_cast<std::uint8_t>(i % seg),
                                         group_of(q.labels[i]) == Group::Outer, q.signs[i] < 0));
  }
  return e;
}

QuantizedToken decode(const EncodedToken& e, const GroupConfig& config) {
  config.validate();
  const std::size_t n = e.vector_len();
  const std::size_t seg = config.segment_len;
  if (n == 0 || n % seg != 0) {
    throw FormatError("dense block of " + std::to_string(e.dense.codes.size()) +
                      " bytes does not cover whole segments");
  }
  const std::size_t segments = n / seg;
  if (e.sparse_counts.size() != segments) {
    throw FormatError("expected " + std::to_string(segments) + " segment counts, found " +
                      std::to_string(e.sparse_counts.size()));
  }

  QuantizedToken q;
  q.origin = e.origin;
  q.codes.resize(n);
  for (std::size_t i = 0; i < n; ++i) q.codes[i] = (e.dense.codes[i / 2] >> ((i & 1) * 4)) & 0xf;
  const std::uint8_t* s = e.dense.scales.data();
  q.middle = GroupScale::from_range(get_half(s + 0), get_half(s + 2));
  q.inner = GroupScale::from_range(get_half(s + 4), get_half(s + 6));
  q.outer = GroupScale::from_range(get_half(s + 8), get_half(s + 10));

  q.labels.resize(n);
  q.signs.assign(n, 0);
  std::vector<bool> is_sparse(n, false);
  std::size_t cursor = 0;
  for (std::size_t segment = 0; segment < segments; ++segment) {
    int previous = -1;
    for (std::size_t k = 0; k < e.sparse_counts[segment]; ++k, ++cursor) {
      if (cursor >= e.sparse.size()) {
        throw FormatError("segment counts exceed the " + std::to_string(e.sparse.size()) +
                              " sparse entries",
                          e.dense.byte_size() + e.sparse.size());
      }
      const SparseEntry entry = e.sparse[cursor];
      const int index = entry.index();
      const auto byte_offset = e.dense.byte_size() + cursor;
      if (static_cast<std::size_t>(index) >= seg) {
        throw FormatError("segment " + std::to_string(segment) + ": sparse index " +
                              std::to_string(index) + " outside segment of " + std::to_string(seg),
                          byte_offset);
      }
      if (index == previous) {
        throw FormatError("segment " + std::to_string(segment) + ": duplicate sparse index " +
                              std::to_string(index),
                          byte_offset);
      }
      if (index < previous) {
        throw FormatError("segment " + std::to_string(segment) + ": sparse index " +
                              std::to_string(index) + " out of order after " +
                              std::to_string(previous),
                          byte_offset);
      }
      previous = index;
      const std::size_t pos = segment * seg + static_cast<std::size_t>(index);
      is_sparse[pos] = true;
      q.signs[pos] = entry.negative() ? -1 : 1;
      if (entry.outer()) {
        q.labels[pos] = entry.negative() ? GroupLabel::OuterLow : GroupLabel::OuterHigh;
      } else {
        q.labels[pos] = GroupLabel::Inner;
      }
    }
  }
  if (cursor != e.sparse.size()) {
    throw FormatError("segment counts cover " + std::to_string(cursor) + " of " +
                          std::to_string(e.sparse.size()) + " sparse entries",
                      e.dense.byte_size() + cursor);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_sparse[i]) q.labels[i] = middle_label(q.codes[i], q.middle);
  }
  return q;
}

EncodedToken assemble_token(std::span<const std::uint8_t> dense_bytes,
                            std::span<const std::uint8_t> sparse_bytes,
                            std::span<const std::uint8_t> sparse_counts, TokenOrigin origin) {
  if (dense_bytes.size() < kScaleRecordBytes) {
    throw FormatError("dense payload shorter than the scale record", dense_bytes.size());
  }
  EncodedToken e;
  e.origin = origin;
  const std::size_t code_bytes = dense_bytes.size() - kScaleRecordBytes;
  e.dense.codes.assign(dense_bytes.begin(), dense_bytes.begin() + static_cast<std::ptrdiff_t>(code_bytes));
  std::copy(dense_bytes.begin() + static_cast<std::ptrdiff_t>(code_bytes), dense_bytes.end(),
            e.dense.scales.begin());
  e.sparse.reserve(sparse_bytes.size());
  for (auto b : sparse_bytes) e.sparse.push_back(SparseEntry::from_byte(b));
  e.sparse_counts.assign(sparse_counts.begin(), sparse_counts.end());
  return e;
}

double effective_bits(const BitStats& stats) {
  if (stats.vector_len == 0) throw ConfigError("effective_bits needs a non-zero vector length");
  if (stats.num_outliers < 0.0 || stats.num_outliers > static_cast<double>(stats.vector_len)) {
    throw ConfigError("outlier count must lie in [0, vector_len]");
  }
  const double len = static_cast<double>(stats.vector_len);
  const double bits = 4.0 * len + 8.0 * stats.num_outliers +
                      (stats.include_scales ? static_cast<double>(kScaleRecordBits) : 0.0);
  return bits / len;
}

std::string dump_token(const EncodedToken& e, const GroupConfig& config) {
  std::ostringstream os;
  const auto& o = e.origin;
  os << "token layer=" << o.layer << " kind=" << to_string(o.kind) << " token=" << o.token
     << " vector_len=" << e.vector_len() << " outliers=" << e.sparse.size()
     << " bits=" << e.bit_size() << " (4*" << e.vector_len() << " + 8*" << e.sparse.size()
     << " + 96)\n";
  os << "dense codes (" << e.dense.codes.size() << " bytes, low nibble first):\n";
  for (std::size_t k = 0; k < e.dense.codes.size(); ++k) {
    const auto b = e.dense.codes[k];
    os << "  byte " << std::setw(4) << k << "  0x" << std::hex << std::setw(2) << std::setfill('0')
       << static_cast<int>(b) << std::dec << std::setfill(' ') << "  " << std::bitset<8>(b)
       << "  e" << 2 * k << "=" << (b & 0xf) << " e" << 2 * k + 1 << "=" << (b >> 4) << "\n";
  }
  static constexpr const char* kScaleNames[6] = {"middle.min", "middle.max", "inner.min",
                                                 "inner.max",  "outer.min",  "outer.max"};
  os << "scale record (12 bytes, binary16 little-endian):\n";
  for (int k = 0; k < 6; ++k) {
    const auto bits = static_cast<std::uint16_t>(e.dense.scales[2 * k] | (e.dense.scales[2 * k + 1] << 8));
    os << "  " << std::setw(10) << kScaleNames[k] << "  0x" << std::hex << std::setw(4)
       << std::setfill('0') << bits << std::dec << std::setfill(' ') << "  "
       << std::bitset<16>(bits) << "  " << half_bits_to_float(bits) << "\n";
  }
  os << "sparse entries (" << e.sparse.size() << " bytes, index[7:2] group[1] sign[0]):\n";
  std::size_t cursor = 0;
  for (std::size_t segment = 0; segment < e.sparse_counts.size(); ++segment) {
    for (std::size_t k = 0; k < e.sparse_counts[segment] && cursor < e.sparse.size(); ++k, ++cursor) {
      const auto entry = e.sparse[cursor];
      os << "  seg " << segment << "  0x" << std::hex << std::setw(2) << std::setfill('0')
         << static_cast<int>(entry.byte()) << std::dec << std::setfill(' ') << "  "
         << std::bitset<6>(entry.index()) << "|" << entry.outer() << "|" << entry.negative()
         << "  pos=" << segment * config.segment_len + entry.index()
         << (entry.outer() ? " outer" : " inner") << (entry.negative() ? " -" : " +") << "\n";
    }
  }
  return os.str();
}

}  // namespace oaken

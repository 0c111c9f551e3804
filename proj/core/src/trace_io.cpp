// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/trace_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "oaken/error.hpp"
#include "oaken/half.hpp"

namespace oaken {
namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void reserve(std::size_t n) { out_.reserve(n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(std::string("truncated header while reading ") + what + ": expected " +
                            std::to_string(n) + " bytes, found " + std::to_string(remaining()),
                        pos_);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const auto v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::uint64_t pos_ = 0;
};

std::vector<float> decode_payload(std::span<const std::uint8_t> bytes, std::uint64_t base_offset) {
  std::vector<float> values(bytes.size() / 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
    const float v = half_bits_to_float(bits);
    if (!std::isfinite(v)) {
      throw FormatError("non-finite half value in payload", base_offset + 2 * i);
    }
    values[i] = v;
  }
  return values;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::uint64_t payload_values(const TraceMeta& meta, std::uint32_t tokens, KindMask kinds) {
  const std::uint64_t num_kinds = kinds == kAllKinds ? 2 : 1;
  return static_cast<std::uint64_t>(meta.num_layers) * num_kinds * tokens * meta.vector_len;
}

}  // namespace

std::vector<std::uint8_t> serialize_trace(const KvTrace& trace) {
  const auto& meta = trace.meta();
  if (meta.model_name.size() > 0xffff) throw ConfigError("model_name longer than 65535 bytes");
  ByteWriter w;
  w.reserve(29 + meta.model_name.size() + trace.payload().size() * 2);
  w.bytes(kTraceMagic, 4);
  w.u16(kTraceVersion);
  w.u32(meta.num_layers);
  w.u32(meta.vector_len);
  w.u32(meta.num_kv_heads);
  w.u32(meta.head_dim);
  w.u32(trace.num_tokens());
  w.u8(trace.kind_mask());
  w.u16(static_cast<std::uint16_t>(meta.model_name.size()));
  w.bytes(meta.model_name.data(), meta.model_name.size());
  for (float v : trace.payload()) w.u16(float_to_half_bits(v));
  return w.take();
}

KvTrace deserialize_trace(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kTraceMagic, 4) != 0) throw FormatError("bad magic, expected OKVT", 0);
  const auto version_offset = r.offset();
  const auto version = r.u16("version");
  if (version != kTraceVersion) {
    throw FormatError("unsupported trace version " + std::to_string(version), version_offset);
  }
  TraceMeta meta;
  meta.num_layers = r.u32("num_layers");
  const auto vector_len_offset = r.offset();
  meta.vector_len = r.u32("vector_len");
  if (meta.vector_len == 0) throw FormatError("header declares vector_len = 0", vector_len_offset);
  meta.num_kv_heads = r.u32("num_kv_heads");
  meta.head_dim = r.u32("head_dim");
  const auto tokens = r.u32("num_tokens");
  const auto kinds_offset = r.offset();
  const auto kinds = r.u8("kinds");
  if (kinds == 0 || (kinds & ~kAllKinds) != 0) {
    throw FormatError("invalid kinds bitmask " + std::to_string(kinds), kinds_offset);
  }
  if (meta.num_layers == 0) throw FormatError("header declares num_layers = 0", 6);
  if (static_cast<std::uint64_t>(meta.num_kv_heads) * meta.head_dim != meta.vector_len) {
    throw FormatError("metadata mismatch: num_kv_heads x head_dim != vector_len", 14);
  }
  const auto name_len = r.u16("model_name length");
  auto name = r.take(name_len, "model_name");
  meta.model_name.assign(name.begin(), name.end());

  const std::uint64_t expected = payload_values(meta, tokens, kinds) * 2;
  const auto payload_offset = r.offset();
  if (r.remaining() < expected) {
    throw FormatError("truncated payload: expected " + std::to_string(expected) +
                          " bytes, found " + std::to_string(r.remaining()),
                      payload_offset + r.remaining());
  }
  if (r.remaining() > expected) {
    throw FormatError("payload length mismatch: metadata implies " + std::to_string(expected) +
                          " bytes, found " + std::to_string(r.remaining()),
                      payload_offset + expected);
  }
  auto payload = decode_payload(r.take(expected, "payload"), payload_offset);
  return KvTrace(std::move(meta), tokens, kinds, std::move(payload));
}

void save_trace(const KvTrace& trace, const std::filesystem::path& path) {
  const auto bytes = serialize_trace(trace);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to '" + path.string() + "'");
}

KvTrace load_trace(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return deserialize_trace(bytes);
}

KvTrace import_raw_trace(const std::filesystem::path& path, TraceMeta meta,
                         std::uint32_t num_tokens, KindMask kinds) {
  meta.validate();
  const auto bytes = read_file(path);
  const std::uint64_t expected = payload_values(meta, num_tokens, kinds) * 2;
  if (bytes.size() != expected) {
    throw FormatError("raw payload length mismatch: expected " + std::to_string(expected) +
                          " bytes, found " + std::to_string(bytes.size()),
                      std::min<std::uint64_t>(bytes.size(), expected));
  }
  return KvTrace(std::move(meta), num_tokens, kinds, decode_payload(bytes, 0));
}

}  // namespace oaken

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Binary trace file format (little-endian):
//
//   offset  size  field
//   0       4     magic "OKVT"
//   4       2     version (u16, currently 1)
//   6       4     num_layers (u32)
//   10      4     vector_len (u32)
//   14      4     num_kv_heads (u32)
//   18      4     head_dim (u32)
//   22      4     num_tokens (u32)
//   26      1     kinds bitmask (u8; bit0 key, bit1 value)
//   27      2     model_name length n (u16)
//   29      n     model_name (UTF-8)
//   29+n    ...   payload: for each layer, kind, token: vector_len binary16 values

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "oaken/kv_model.hpp"

namespace oaken {

inline constexpr char kTraceMagic[4] = {'O', 'K', 'V', 'T'};
inline constexpr std::uint16_t kTraceVersion = 1;

std::vector<std::uint8_t> serialize_trace(const KvTrace& trace);
KvTrace deserialize_trace(std::span<const std::uint8_t> bytes);

void save_trace(const KvTrace& trace, const std::filesystem::path& path);
KvTrace load_trace(const std::filesystem::path& path);

/// Builds a trace from a headerless file of little-endian binary16 values laid
/// out in payload order, using caller-supplied metadata.
KvTrace import_raw_trace(const std::filesystem::path& path, TraceMeta meta,
                         std::uint32_t num_tokens, KindMask kinds);

}  // namespace oaken

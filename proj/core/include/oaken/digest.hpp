// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace oaken {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

class KvTrace;
/// Digest of the serialized trace (header and payload).
std::string trace_digest(const KvTrace& trace);

}  // namespace oaken

// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/digest.hpp"

#include <openssl/sha.h>

#include <array>

#include "oaken/trace_io.hpp"

namespace oaken {

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> md{};
  SHA256(bytes.data(), bytes.size(), md.data());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(md.size() * 2);
  for (unsigned char b : md) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string trace_digest(const KvTrace& trace) { return sha256_hex(serialize_trace(trace)); }

}  // namespace oaken

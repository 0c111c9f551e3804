// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace oaken {

/// Base of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (bad ratios, zero lengths, mismatched metadata).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or byte stream. `offset` is the byte position where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  explicit FormatError(const std::string& what) : Error(what), offset_(0) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Threshold extraction failed (too few samples, degenerate distribution).
class ProfilingError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an internal contract (e.g. label inconsistent with value).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// The memory pool cannot satisfy an allocation.
class CapacityError : public Error {
 public:
  CapacityError(std::uint64_t requested, std::uint64_t available)
      : Error("out of memory pages: requested " + std::to_string(requested) +
              " bytes, available " + std::to_string(available) + " bytes"),
        requested_(requested),
        available_(available) {}

  std::uint64_t requested() const noexcept { return requested_; }
  std::uint64_t available() const noexcept { return available_; }

 private:
  std::uint64_t requested_;
  std::uint64_t available_;
};

/// Lookup of data that was never written.
class LookupError : public Error {
 public:
  using Error::Error;
};

}  // namespace oaken

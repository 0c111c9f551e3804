// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

// Page-granular memory management for quantized KV data.
//
// Each compute core owns one Mmu: a disjoint range of physical pages and two
// management tables, one for dense bytes (codes + scale records) and one for
// sparse COO bytes. Every (request, layer, kind, head) key appends its tokens
// sequentially to its own pages, so the whole history of a key reads back as
// one burst transaction per page.

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "oaken/encoding.hpp"
#include "oaken/kv_model.hpp"

namespace oaken {

struct MemoryConfig {
  std::uint64_t page_size = 4096;
  std::uint64_t burst_size = 64;
  std::uint64_t capacity = 64ull << 20;

  std::uint64_t num_pages() const { return capacity / page_size; }
  /// Throws ConfigError unless all are positive, page_size is a multiple of
  /// burst_size and capacity is a multiple of page_size.
  void validate() const;
};

struct KvKey {
  std::uint32_t request = 0;
  std::uint32_t layer = 0;
  KvKind kind = KvKind::Key;
  std::uint32_t head = 0;

  auto operator<=>(const KvKey&) const = default;
};

enum class TxKind : std::uint8_t { Read, Write };

struct Transaction {
  TxKind kind = TxKind::Read;
  std::uint64_t address = 0;
  std::uint64_t length = 0;
  std::uint64_t bursts = 0;

  bool operator==(const Transaction&) const = default;
};

inline std::uint64_t burst_count(std::uint64_t length, std::uint64_t burst_size) {
  return (length + burst_size - 1) / burst_size;
}

/// One physical page backing a slice of a key's byte stream.
struct PageExtent {
  std::uint64_t page_id = 0;
  std::uint64_t virtual_begin = 0;
  std::uint64_t used = 0;
};

/// Where one token's bytes live in the key's stream.
struct TokenTransfer {
  std::uint64_t virtual_offset = 0;
  std::uint64_t length = 0;
  std::vector<std::uint8_t> segment_counts;  // sparse table only
};

struct TableEntry {
  std::vector<PageExtent> pages;
  std::vector<TokenTransfer> tokens;

  std::uint64_t stream_bytes() const;
};

class ManagementTable {
 public:
  const TableEntry* find(const KvKey& key) const;
  TableEntry& entry(const KvKey& key) { return entries_[key]; }
  const std::map<KvKey, TableEntry>& entries() const { return entries_; }
  void erase_request(std::uint32_t request);

 private:
  std::map<KvKey, TableEntry> entries_;
};

struct MmuStats {
  std::uint64_t pages_allocated = 0;
  std::uint64_t internal_fragmentation = 0;  // unused bytes in allocated pages
  std::uint64_t transactions = 0;
  std::uint64_t read_transactions = 0;
  std::uint64_t write_transactions = 0;
  std::uint64_t bytes_moved = 0;
  std::uint64_t bursts = 0;
  double burst_efficiency = 0.0;  // bytes_moved / (bursts * burst_size)

  /// One JSON object per line-friendly record.
  std::string to_text() const;
};

struct ReadResult {
  std::vector<std::uint8_t> dense;
  std::vector<std::uint8_t> sparse;
  std::vector<Transaction> transactions;
};

class Mmu {
 public:
  /// Owns physical pages [first_page, first_page + num_pages). Distinct Mmu
  /// instances must be given disjoint ranges; by default the whole capacity.
  explicit Mmu(MemoryConfig config);
  Mmu(MemoryConfig config, std::uint64_t first_page, std::uint64_t num_pages);

  const MemoryConfig& config() const { return config_; }

  /// Appends one token. Its origin token index must equal the number of tokens
  /// already written for `key`. Throws CapacityError, leaving state
  /// untouched, when the pool cannot hold the bytes.
  std::vector<Transaction> write_token(const KvKey& key, const EncodedToken& token);

  /// Reads tokens [begin, end) of `key`; one transaction per page extent.
  ReadResult read_sequence(const KvKey& key, std::uint32_t begin, std::uint32_t end);

  /// read_sequence followed by reassembly into encoded tokens.
  std::vector<EncodedToken> read_tokens(const KvKey& key, std::uint32_t begin, std::uint32_t end);

  std::uint32_t tokens_written(const KvKey& key) const;

  /// Frees every page owned by `request`.
  void release_request(std::uint32_t request);

  MmuStats stats() const;
  const ManagementTable& dense_table() const { return dense_; }
  const ManagementTable& sparse_table() const { return sparse_; }
  std::uint64_t free_pages() const { return free_list_.size(); }
  std::uint64_t first_page() const { return first_page_; }
  std::uint64_t page_count() const { return num_pages_; }

  /// Every transaction is printed as "kind addr len bursts" when set.
  void set_trace_sink(std::ostream* sink) { trace_ = sink; }

  /// Throws ContractError if pages overlap, leak, or break the sequential
  /// layout.
  void check_invariants() const;

 private:
  std::uint64_t allocate_page();
  void release_page(std::uint64_t page);
  std::uint64_t pages_needed(const TableEntry* entry, std::uint64_t length) const;
  void append(TableEntry& entry, std::span<const std::uint8_t> bytes, std::vector<Transaction>& out);
  void gather(const TableEntry& entry, std::uint64_t begin, std::uint64_t end,
              std::vector<std::uint8_t>& bytes, std::vector<Transaction>& out);
  void record(const Transaction& tx);

  MemoryConfig config_;
  std::uint64_t first_page_;
  std::uint64_t num_pages_;
  std::vector<std::uint64_t> free_list_;  // lowest id at the back
  std::vector<bool> allocated_;
  std::map<std::uint64_t, std::vector<std::uint8_t>> page_data_;
  ManagementTable dense_;
  ManagementTable sparse_;
  std::uint64_t read_tx_ = 0;
  std::uint64_t write_tx_ = 0;
  std::uint64_t bytes_moved_ = 0;
  std::uint64_t bursts_ = 0;
  std::ostream* trace_ = nullptr;
};

}  // namespace oaken

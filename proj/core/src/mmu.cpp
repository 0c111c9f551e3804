// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/mmu.hpp"

#include <algorithm>
#include <cstring>
#include <set>
#include <sstream>

#include "json.hpp"
#include "oaken/error.hpp"

namespace oaken {

void MemoryConfig::validate() const {
  if (page_size == 0 || burst_size == 0 || capacity == 0) {
    throw ConfigError("memory page_size, burst_size and capacity must be positive");
  }
  if (page_size % burst_size != 0) throw ConfigError("page_size must be a multiple of burst_size");
  if (capacity % page_size != 0) throw ConfigError("capacity must be a multiple of page_size");
}

std::uint64_t TableEntry::stream_bytes() const {
  if (tokens.empty()) return 0;
  return tokens.back().virtual_offset + tokens.back().length;
}

const TableEntry* ManagementTable::find(const KvKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void ManagementTable::erase_request(std::uint32_t request) {
  std::erase_if(entries_, [&](const auto& kv) { return kv.first.request == request; });
}

std::string MmuStats::to_text() const {
  nlohmann::ordered_json j{{"record", "mmu_stats"},
                           {"pages_allocated", pages_allocated},
                           {"internal_fragmentation", internal_fragmentation},
                           {"transactions", transactions},
                           {"read_transactions", read_transactions},
                           {"write_transactions", write_transactions},
                           {"bytes_moved", bytes_moved},
                           {"bursts", bursts},
                           {"burst_efficiency", burst_efficiency}};
  return j.dump();
}

Mmu::Mmu(MemoryConfig config) : Mmu(config, 0, config.capacity / std::max<std::uint64_t>(config.page_size, 1)) {}

Mmu::Mmu(MemoryConfig config, std::uint64_t first_page, std::uint64_t num_pages)
    : config_(config), first_page_(first_page), num_pages_(num_pages) {
  config_.validate();
  if (num_pages_ == 0) throw ConfigError("MMU needs at least one page");
  if (first_page_ + num_pages_ > config_.num_pages()) {
    throw ConfigError("MMU page range exceeds memory capacity");
  }
  allocated_.assign(num_pages_, false);
  free_list_.reserve(num_pages_);
  for (std::uint64_t p = num_pages_; p-- > 0;) free_list_.push_back(first_page_ + p);
}

std::uint64_t Mmu::allocate_page() {
  const std::uint64_t page = free_list_.back();
  free_list_.pop_back();
  const std::uint64_t local = page - first_page_;
  if (allocated_[local]) throw ContractError("page " + std::to_string(page) + " allocated twice");
  allocated_[local] = true;
  page_data_[page].assign(config_.page_size, 0);
  return page;
}

void Mmu::release_page(std::uint64_t page) {
  const std::uint64_t local = page - first_page_;
  if (!allocated_[local]) throw ContractError("page " + std::to_string(page) + " freed twice");
  allocated_[local] = false;
  page_data_.erase(page);
  free_list_.push_back(page);
}

std::uint64_t Mmu::pages_needed(const TableEntry* entry, std::uint64_t length) const {
  std::uint64_t tail_free = 0;
  if (entry != nullptr && !entry->pages.empty()) {
    tail_free = config_.page_size - entry->pages.back().used;
  }
  if (length <= tail_free) return 0;
  return (length - tail_free + config_.page_size - 1) / config_.page_size;
}

void Mmu::record(const Transaction& tx) {
  (tx.kind == TxKind::Read ? read_tx_ : write_tx_) += 1;
  bytes_moved_ += tx.length;
  bursts_ += tx.bursts;
  if (trace_ != nullptr) {
    *trace_ << (tx.kind == TxKind::Read ? "read" : "write") << ' ' << tx.address << ' '
            << tx.length << ' ' << tx.bursts << '\n';
  }
}

void Mmu::append(TableEntry& entry, std::span<const std::uint8_t> bytes,
                 std::vector<Transaction>& out) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    if (entry.pages.empty() || entry.pages.back().used == config_.page_size) {
      const std::uint64_t begin = entry.pages.empty()
                                      ? 0
                                      : entry.pages.back().virtual_begin + config_.page_size;
      entry.pages.push_back({allocate_page(), begin, 0});
    }
    PageExtent& page = entry.pages.back();
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - done, config_.page_size - page.used);
    std::memcpy(page_data_[page.page_id].data() + page.used, bytes.data() + done, chunk);
    Transaction tx{TxKind::Write, page.page_id * config_.page_size + page.used, chunk,
                   burst_count(chunk, config_.burst_size)};
    record(tx);
    out.push_back(tx);
    page.used += chunk;
    done += chunk;
  }
}

std::vector<Transaction> Mmu::write_token(const KvKey& key, const EncodedToken& token) {
  if (token.origin.layer != key.layer || token.origin.kind != key.kind) {
    throw ContractError("token origin does not match the key's layer/kind");
  }
  const std::uint32_t next = tokens_written(key);
  if (token.origin.token != next) {
    throw ContractError("non-sequential append: key expects token " + std::to_string(next) +
                        ", got " + std::to_string(token.origin.token));
  }
  const auto dense_bytes = token.dense_bytes();
  const auto sparse_bytes = token.sparse_bytes();
  const std::uint64_t needed =
      pages_needed(dense_.find(key), dense_bytes.size()) + pages_needed(sparse_.find(key), sparse_bytes.size());
  if (needed > free_list_.size()) {
    auto tail_free = [&](const TableEntry* e) -> std::uint64_t {
      return (e == nullptr || e->pages.empty()) ? 0 : config_.page_size - e->pages.back().used;
    };
    throw CapacityError(dense_bytes.size() + sparse_bytes.size(),
                        free_list_.size() * config_.page_size + tail_free(dense_.find(key)) +
                            tail_free(sparse_.find(key)));
  }

  std::vector<Transaction> txs;
  TableEntry& dense = dense_.entry(key);
  dense.tokens.push_back({dense.stream_bytes(), dense_bytes.size(), {}});
  append(dense, dense_bytes, txs);

  TableEntry& sparse = sparse_.entry(key);
  sparse.tokens.push_back({sparse.stream_bytes(), sparse_bytes.size(), token.sparse_counts});
  append(sparse, sparse_bytes, txs);
  return txs;
}

std::uint32_t Mmu::tokens_written(const KvKey& key) const {
  const TableEntry* e = dense_.find(key);
  return e == nullptr ? 0 : static_cast<std::uint32_t>(e->tokens.size());
}

void Mmu::gather(const TableEntry& entry, std::uint64_t begin, std::uint64_t end,
                 std::vector<std::uint8_t>& bytes, std::vector<Transaction>& out) {
  for (const PageExtent& page : entry.pages) {
    const std::uint64_t lo = std::max(begin, page.virtual_begin);
    const std::uint64_t hi = std::min(end, page.virtual_begin + page.used);
    if (lo >= hi) continue;
    const auto& data = page_data_.at(page.page_id);
    const std::uint64_t off = lo - page.virtual_begin;
    bytes.insert(bytes.end(), data.begin() + static_cast<std::ptrdiff_t>(off),
                 data.begin() + static_cast<std::ptrdiff_t>(off + (hi - lo)));
    Transaction tx{TxKind::Read, page.page_id * config_.page_size + off, hi - lo,
                   burst_count(hi - lo, config_.burst_size)};
    record(tx);
    out.push_back(tx);
  }
}

ReadResult Mmu::read_sequence(const KvKey& key, std::uint32_t begin, std::uint32_t end) {
  const TableEntry* dense = dense_.find(key);
  const TableEntry* sparse = sparse_.find(key);
  const std::uint32_t written = tokens_written(key);
  if (begin > end) throw LookupError("empty or inverted token range");
  if (dense == nullptr || end > written) {
    throw LookupError("token " + std::to_string(std::max(begin, written)) +
                      " was never written for request " + std::to_string(key.request) +
                      " layer " + std::to_string(key.layer) + " " + std::string(to_string(key.kind)) +
                      " head " + std::to_string(key.head));
  }
  ReadResult r;
  if (begin == end) return r;
  auto range = [&](const TableEntry& e) {
    const auto& first = e.tokens[begin];
    const auto& last = e.tokens[end - 1];
    return std::make_pair(first.virtual_offset, last.virtual_offset + last.length);
  };
  auto [dlo, dhi] = range(*dense);
  gather(*dense, dlo, dhi, r.dense, r.transactions);
  auto [slo, shi] = range(*sparse);
  gather(*sparse, slo, shi, r.sparse, r.transactions);
  return r;
}

std::vector<EncodedToken> Mmu::read_tokens(const KvKey& key, std::uint32_t begin, std::uint32_t end) {
  ReadResult r = read_sequence(key, begin, end);
  const TableEntry& dense = *dense_.find(key);
  const TableEntry& sparse = *sparse_.find(key);
  std::vector<EncodedToken> out;
  out.reserve(end - begin);
  const std::uint64_t dense_base = begin < end ? dense.tokens[begin].virtual_offset : 0;
  const std::uint64_t sparse_base = begin < end ? sparse.tokens[begin].virtual_offset : 0;
  for (std::uint32_t t = begin; t < end; ++t) {
    const auto& d = dense.tokens[t];
    const auto& s = sparse.tokens[t];
    out.push_back(assemble_token(
        std::span(r.dense).subspan(d.virtual_offset - dense_base, d.length),
        std::span(r.sparse).subspan(s.virtual_offset - sparse_base, s.length), s.segment_counts,
        TokenOrigin{key.layer, key.kind, t}));
  }
  return out;
}

void Mmu::release_request(std::uint32_t request) {
  for (ManagementTable* table : {&dense_, &sparse_}) {
    for (const auto& [key, entry] : table->entries()) {
      if (key.request != request) continue;
      for (const auto& page : entry.pages) release_page(page.page_id);
    }
    table->erase_request(request);
  }
}

MmuStats Mmu::stats() const {
  MmuStats s;
  for (const ManagementTable* table : {&dense_, &sparse_}) {
    for (const auto& [key, entry] : table->entries()) {
      for (const auto& page : entry.pages) {
        ++s.pages_allocated;
        s.internal_fragmentation += config_.page_size - page.used;
      }
    }
  }
  s.read_transactions = read_tx_;
  s.write_transactions = write_tx_;
  s.transactions = read_tx_ + write_tx_;
  s.bytes_moved = bytes_moved_;
  s.bursts = bursts_;
  if (bursts_ > 0) {
    s.burst_efficiency = static_cast<double>(bytes_moved_) /
                         (static_cast<double>(bursts_) * static_cast<double>(config_.burst_size));
  }
  return s;
}

void Mmu::check_invariants() const {
  std::set<std::uint64_t> seen;
  for (const ManagementTable* table : {&dense_, &sparse_}) {
    for (const auto& [key, entry] : table->entries()) {
      for (std::size_t i = 0; i < entry.pages.size(); ++i) {
        const auto& page = entry.pages[i];
        if (page.page_id < first_page_ || page.page_id >= first_page_ + num_pages_) {
          throw ContractError("page " + std::to_string(page.page_id) + " outside this MMU's pool");
        }
        if (!seen.insert(page.page_id).second) {
          throw ContractError("page " + std::to_string(page.page_id) + " mapped twice");
        }
        if (!allocated_[page.page_id - first_page_]) {
          throw ContractError("page " + std::to_string(page.page_id) + " mapped but not allocated");
        }
        if (page.used > config_.page_size) throw ContractError("page overfilled");
        if (i + 1 < entry.pages.size() && page.used != config_.page_size) {
          throw ContractError("gap before the last page of a key");
        }
        if (page.virtual_begin != i * config_.page_size) {
          throw ContractError("non-sequential virtual layout");
        }
      }
      std::uint64_t expected = 0;
      for (const auto& t : entry.tokens) {
        if (t.virtual_offset != expected) throw ContractError("token stream has a gap");
        expected += t.length;
      }
      std::uint64_t used = 0;
      for (const auto& page : entry.pages) used += page.used;
      if (used != expected) throw ContractError("page usage disagrees with token transfer sizes");
    }
  }
  const auto live = static_cast<std::uint64_t>(std::count(allocated_.begin(), allocated_.end(), true));
  if (live != seen.size() || live + free_list_.size() != num_pages_) {
    throw ContractError("page pool accounting is inconsistent (leak or double free)");
  }
}

}  // namespace oaken

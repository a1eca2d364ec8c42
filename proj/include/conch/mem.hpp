// Copyright 2026 The Conch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tagged memory hierarchy.
//
// Registers and cache lines hold plaintext plus one tag bit per word. DRAM
// holds ciphertext for every tagged word that is not cache resident: a dirty
// line is encrypted word-by-word (current thread key, word address as tweak)
// on writeback and decrypted on fill. Tags live in a shadow bitmap outside
// the simulated address space, one bit per 64-bit word.
//
// All three cycle models execute identically; they only differ in which tag
// and cipher traffic is charged:
//   Baseline  no tag machinery is priced or counted
//   Model A   every dcache fill/writeback costs one DRAM access to the shadow
//             region plus cipher_block cycles per tagged word
//   Model B   as A, but shadow accesses go through a 4 KiB 8-way tag cache
//             whose 64-byte line covers the tags of 4 KiB of data

#ifndef CONCH_MEM_HPP_
#define CONCH_MEM_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conch/cache.hpp"
#include "conch/crypt.hpp"
#include "conch/types.hpp"

namespace conch {

enum class CycleModel { kBaseline, kModelA, kModelB };

std::string_view to_string(CycleModel model);

// Per-event cycle prices. Shared by all models.
struct CycleCosts {
  std::uint64_t alu = 1;
  std::uint64_t mul = 3;
  std::uint64_t div = 33;
  std::uint64_t load_hit = 2;           // access within one 8-byte word
  std::uint64_t load_hit_crossing = 3;  // access straddling two words
  std::uint64_t store_hit = 1;
  std::uint64_t branch = 1;
  std::uint64_t branch_mispredict = 3;  // static backward-taken predictor
  std::uint64_t jump = 2;
  std::uint64_t dram_access_latency = 60;
  std::uint64_t cipher_block = 4;
  std::uint64_t tag_cache_hit = 1;
};

struct MemoryConfig {
  std::uint64_t dram_base = 0x8000'0000;
  std::uint64_t dram_bytes = 64ULL << 20;
  CacheGeometry dcache{32 * 1024, 8, 64};
  CacheGeometry icache{32 * 1024, 8, 64};
  CacheGeometry tag_cache{4 * 1024, 8, 64};
  CycleModel model = CycleModel::kBaseline;
  CycleCosts costs;
  // false = degenerate direct-DRAM mode: every word access goes to DRAM.
  bool caches_enabled = true;
  bool strict_alignment = false;
};

struct MemStats {
  CacheStats dcache;
  CacheStats icache;
  CacheStats tag_cache;
  std::uint64_t dram_data_accesses = 0;
  std::uint64_t dram_tag_accesses = 0;
  std::uint64_t cipher_blocks = 0;
};

struct LoadResult {
  std::uint64_t value = 0;
  bool tag = false;
  std::uint64_t cycles = 0;
};

struct FetchResult {
  std::uint32_t word = 0;
  std::uint64_t cycles = 0;
};

// The attacker's view of DRAM: raw words (ciphertext where tagged) and tags.
struct RawDump {
  std::uint64_t base = 0;  // 8-byte aligned
  std::vector<std::uint64_t> words;
  std::vector<bool> tags;

  std::vector<std::uint8_t> bytes() const;
};

// `address: word tag` lines with a `# <address>` header every 8 words.
std::string format_dump(const RawDump& dump);

class MemorySystem {
 public:
  // Called for every word written to DRAM by a line writeback (or a direct
  // store in direct-DRAM mode).
  using WritebackObserver =
      std::function<void(std::uint64_t addr, std::uint64_t raw, bool tag, std::uint64_t plaintext)>;

  explicit MemorySystem(const MemoryConfig& config = {});

  const MemoryConfig& config() const { return config_; }
  CycleModel model() const { return config_.model; }

  bool contains(std::uint64_t addr, std::uint64_t len) const;
  std::uint64_t dram_end() const { return config_.dram_base + config_.dram_bytes; }

  // Copies bytes straight into DRAM with tags cleared; no cache effects.
  void write_initial(std::uint64_t addr, std::span<const std::uint8_t> bytes);

  // `width` in {1,2,4,8}. Returned tag is the OR of the tags of the word(s)
  // containing the accessed bytes; cycles include the hit cost.
  LoadResult load(std::uint64_t addr, unsigned width, bool is_signed, const Key128& key);

  // Full aligned 8-byte stores replace the word tag with `tag`; narrower or
  // word-crossing stores OR it in (retain). `taint` holds the byte-oracle
  // taint of the stored bytes, bit i for byte i. Returns cycles incl. hit cost.
  std::uint64_t store(std::uint64_t addr, unsigned width, std::uint64_t value, bool tag,
                      std::uint8_t taint, const Key128& key);

  // Tags every word overlapping [base, base+len); marks the bytes in the oracle.
  std::uint64_t tag_set_range(std::uint64_t base, std::uint64_t len, const Key128& key);
  // Clears the tag of every word fully inside [base, base+len); clears the
  // oracle bytes in range. Partially covered words keep their tag.
  std::uint64_t tag_clear_range(std::uint64_t base, std::uint64_t len, const Key128& key);
  // Tag of the word containing `addr`, through the hierarchy.
  LoadResult read_tag(std::uint64_t addr, const Key128& key);

  FetchResult fetch(std::uint64_t pc, const Key128& key);

  // Writes back all dirty lines, invalidates every cache. Returns cycles.
  std::uint64_t flush_and_sync(const Key128& key);

  // Flushes, then returns DRAM contents for the words covering the range.
  RawDump raw_dump(std::uint64_t addr, std::uint64_t len, const Key128& key);

  // Logical value of a word without side effects: resident line data, else
  // DRAM decrypted with `key` when tagged.
  TaggedWord peek_word(std::uint64_t addr, const Key128& key) const;
  std::vector<std::uint8_t> peek_bytes(std::uint64_t addr, std::uint64_t len,
                                       const Key128& key) const;
  bool logical_tag(std::uint64_t addr) const;

  // Raw backing store, for tests and reports.
  std::uint64_t dram_word(std::uint64_t addr) const;
  bool shadow_tag(std::uint64_t addr) const;
  std::uint8_t byte_taint(std::uint64_t addr) const;  // oracle mask of the word
  // Oracle taint of `width` bytes from `addr`, bit i for byte addr+i.
  std::uint8_t taint_bits(std::uint64_t addr, unsigned width) const;
  std::uint64_t word_count() const { return dram_.size(); }
  std::uint64_t shadow_bits() const { return shadow_.size() * 64; }

  // Shadow-region byte holding the tags of the word at `addr`, and the
  // tag-cache line address that covers it.
  std::uint64_t shadow_byte_offset(std::uint64_t addr) const;
  std::uint64_t tag_line_of(std::uint64_t addr) const;

  MemStats stats() const;
  // Cipher operations performed on tagged words none of whose bytes are
  // tainted in the oracle. Counted in every model.
  std::uint64_t overtag_cipher_ops() const { return overtag_cipher_ops_; }

  void set_writeback_observer(WritebackObserver observer) { observer_ = std::move(observer); }

  // Audit mode keeps an independent record of each word's logical value and
  // the key that last encrypted it, and lists the words written each step.
  void enable_audit();
  bool audit_enabled() const { return audit_; }
  // Words (addresses) whose logical tag or taint changed since the last call.
  std::vector<std::uint64_t> take_touched_words();
  // Scans every non-resident word: tagged => DRAM == E(owner key, addr,
  // logical); untagged => DRAM == logical. Returns the number of violations.
  std::uint64_t audit_ciphertext_invariant() const;

 private:
  std::uint64_t index_of(std::uint64_t addr) const { return (addr - config_.dram_base) / 8; }
  void check_access(std::uint64_t addr, std::uint64_t len, unsigned align) const;

  // Word-granular read-modify-write through the hierarchy. `fn(TaggedWord&)`
  // returns true when it changed the word. Returns the penalty cycles.
  template <typename Fn>
  std::uint64_t access_word(std::uint64_t word_addr, const Key128& key, Fn&& fn);

  // Ensures the dcache holds the line; returns slot and adds penalty cycles.
  std::size_t ensure_line(std::uint64_t line_addr, const Key128& key, std::uint64_t& cycles);
  std::uint64_t fill(std::size_t slot, std::uint64_t line_addr, const Key128& key);
  std::uint64_t writeback(std::size_t slot, const Key128& key);
  std::uint64_t tag_traffic(std::uint64_t data_addr, bool write);
  std::uint64_t cipher_cost(std::uint64_t blocks);

  // DRAM-side word transforms shared by the cached and direct paths.
  TaggedWord dram_read(std::uint64_t word_addr, const Key128& key);
  void dram_write(std::uint64_t word_addr, const TaggedWord& w, const Key128& key);

  void set_shadow(std::uint64_t idx, bool tag);
  void touch(std::uint64_t word_addr);
  std::uint16_t audit_key_id(const Key128& key);

  MemoryConfig config_;
  std::vector<std::uint64_t> dram_;
  std::vector<std::uint64_t> shadow_;     // 1 bit per word
  std::vector<std::uint8_t> byte_taint_;  // 1 bit per byte
  CacheModel dcache_;
  CacheModel icache_;
  CacheModel tag_cache_;
  std::uint64_t dram_data_accesses_ = 0;
  std::uint64_t dram_tag_accesses_ = 0;
  std::uint64_t cipher_blocks_ = 0;
  std::uint64_t overtag_cipher_ops_ = 0;
  WritebackObserver observer_;

  bool audit_ = false;
  std::vector<std::uint64_t> mirror_;
  std::vector<std::uint16_t> owner_;
  std::vector<Key128> audit_keys_;
  std::vector<std::uint64_t> touched_;
};

}  // namespace conch

#endif  // CONCH_MEM_HPP_

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

#include "conch/mem.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace conch {
namespace {

constexpr std::uint16_t kNoOwner = 0xFFFF;

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string_view to_string(TrapKind kind) {
  switch (kind) {
    case TrapKind::kIllegalInstruction: return "IllegalInstruction";
    case TrapKind::kMisalignedAccess: return "MisalignedAccess";
    case TrapKind::kOutOfBoundsAccess: return "OutOfBoundsAccess";
    case TrapKind::kBreakpoint: return "Breakpoint";
  }
  return "Unknown";
}

Trap::Trap(TrapKind kind, std::uint64_t addr, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + " at 0x" + hex16(addr) + ": " + what),
      kind_(kind),
      addr_(addr) {}

std::string_view to_string(CycleModel model) {
  switch (model) {
    case CycleModel::kBaseline: return "baseline";
    case CycleModel::kModelA: return "model_a";
    case CycleModel::kModelB: return "model_b";
  }
  return "unknown";
}

std::vector<std::uint8_t> RawDump::bytes() const {
  std::vector<std::uint8_t> out;
  out.reserve(words.size() * 8);
  for (std::uint64_t w : words) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(w >> (8 * i)));
  }
  return out;
}

std::string format_dump(const RawDump& dump) {
  std::ostringstream out;
  for (std::size_t i = 0; i < dump.words.size(); ++i) {
    const std::uint64_t addr = dump.base + 8 * i;
    if (i % 8 == 0) out << "# " << hex16(addr) << "\n";
    out << hex16(addr) << ": " << hex16(dump.words[i]) << ' ' << (dump.tags[i] ? 1 : 0) << "\n";
  }
  return out.str();
}

MemorySystem::MemorySystem(const MemoryConfig& config)
    : config_(config),
      dcache_(config.dcache),
      icache_(config.icache),
      tag_cache_(config.tag_cache) {
  if (config_.dram_base % 4096 != 0 || config_.dram_bytes % 4096 != 0 || config_.dram_bytes == 0) {
    throw std::invalid_argument("DRAM base and size must be non-zero multiples of 4 KiB");
  }
  const std::uint64_t words = config_.dram_bytes / 8;
  dram_.assign(words, 0);
  shadow_.assign((words + 63) / 64, 0);
  byte_taint_.assign(words, 0);
}

bool MemorySystem::contains(std::uint64_t addr, std::uint64_t len) const {
  if (addr < config_.dram_base) return false;
  const std::uint64_t off = addr - config_.dram_base;
  return len <= config_.dram_bytes && off <= config_.dram_bytes - len;
}

void MemorySystem::check_access(std::uint64_t addr, std::uint64_t len, unsigned align) const {
  if (!contains(addr, len)) {
    throw Trap(TrapKind::kOutOfBoundsAccess, addr,
               "access of " + std::to_string(len) + " bytes outside DRAM");
  }
  if (config_.strict_alignment && align > 1 && addr % align != 0) {
    throw Trap(TrapKind::kMisalignedAccess, addr,
               std::to_string(align) + "-byte access not naturally aligned");
  }
}

void MemorySystem::write_initial(std::uint64_t addr, std::span<const std::uint8_t> bytes) {
  if (!contains(addr, bytes.size())) {
    throw Trap(TrapKind::kOutOfBoundsAccess, addr, "initial image outside DRAM");
  }
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const std::uint64_t a = addr + i;
    const std::uint64_t idx = index_of(a);
    const unsigned shift = 8 * static_cast<unsigned>(a % 8);
    dram_[idx] = (dram_[idx] & ~(0xFFULL << shift)) | (std::uint64_t{bytes[i]} << shift);
    set_shadow(idx, false);
    byte_taint_[idx] = 0;
    if (audit_) mirror_[idx] = dram_[idx];
  }
}

void MemorySystem::set_shadow(std::uint64_t idx, bool tag) {
  const std::uint64_t bit = 1ULL << (idx % 64);
  if (tag) {
    shadow_[idx / 64] |= bit;
  } else {
    shadow_[idx / 64] &= ~bit;
  }
}

bool MemorySystem::shadow_tag(std::uint64_t addr) const {
  const std::uint64_t idx = index_of(addr);
  return (shadow_[idx / 64] >> (idx % 64)) & 1;
}

std::uint64_t MemorySystem::dram_word(std::uint64_t addr) const { return dram_[index_of(addr)]; }

std::uint8_t MemorySystem::byte_taint(std::uint64_t addr) const {
  return byte_taint_[index_of(addr)];
}

std::uint8_t MemorySystem::taint_bits(std::uint64_t addr, unsigned width) const {
  std::uint8_t out = 0;
  for (unsigned b = 0; b < width && b < 8; ++b) {
    const std::uint64_t a = addr + b;
    if ((byte_taint_[index_of(a)] >> (a % 8)) & 1) out = static_cast<std::uint8_t>(out | (1u << b));
  }
  return out;
}

std::uint64_t MemorySystem::shadow_byte_offset(std::uint64_t addr) const {
  return index_of(addr) / 8;
}

std::uint64_t MemorySystem::tag_line_of(std::uint64_t addr) const {
  return tag_cache_.line_of(shadow_byte_offset(addr));
}

void MemorySystem::touch(std::uint64_t word_addr) {
  if (audit_) touched_.push_back(word_addr);
}

std::uint16_t MemorySystem::audit_key_id(const Key128& key) {
  for (std::size_t i = 0; i < audit_keys_.size(); ++i) {
    if (audit_keys_[i] == key) return static_cast<std::uint16_t>(i);
  }
  audit_keys_.push_back(key);
  return static_cast<std::uint16_t>(audit_keys_.size() - 1);
}

std::uint64_t MemorySystem::cipher_cost(std::uint64_t blocks) {
  if (config_.model == CycleModel::kBaseline || blocks == 0) return 0;
  cipher_blocks_ += blocks;
  return blocks * config_.costs.cipher_block;
}

std::uint64_t MemorySystem::tag_traffic(std::uint64_t data_addr, bool write) {
  const CycleCosts& c = config_.costs;
  switch (config_.model) {
    case CycleModel::kBaseline:
      return 0;
    case CycleModel::kModelA:
      ++dram_tag_accesses_;
      return c.dram_access_latency;
    case CycleModel::kModelB: {
      const std::uint64_t line = tag_line_of(data_addr);
      if (auto slot = tag_cache_.access(line)) {
        if (write) tag_cache_.line(*slot).dirty = true;
        return c.tag_cache_hit;
      }
      std::uint64_t cycles = c.dram_access_latency;
      ++dram_tag_accesses_;
      const std::size_t victim = tag_cache_.victim(line);
      if (tag_cache_.line(victim).valid && tag_cache_.line(victim).dirty) {
        ++dram_tag_accesses_;
        cycles += c.dram_access_latency;
      }
      tag_cache_.install(victim, line);
      if (write) tag_cache_.line(victim).dirty = true;
      return cycles;
    }
  }
  return 0;
}

TaggedWord MemorySystem::dram_read(std::uint64_t word_addr, const Key128& key) {
  const std::uint64_t idx = index_of(word_addr);
  const bool tag = shadow_tag(word_addr);
  const std::uint64_t raw = dram_[idx];
  if (!tag) return {raw, false};
  if (byte_taint_[idx] == 0) ++overtag_cipher_ops_;
  return {qarma_decrypt(key, Tweak{word_addr}, raw), true};
}

void MemorySystem::dram_write(std::uint64_t word_addr, const TaggedWord& w, const Key128& key) {
  const std::uint64_t idx = index_of(word_addr);
  std::uint64_t raw = w.value;
  if (w.tag) {
    raw = qarma_encrypt(key, Tweak{word_addr}, w.value);
    if (byte_taint_[idx] == 0) ++overtag_cipher_ops_;
    if (audit_) owner_[idx] = audit_key_id(key);
  }
  dram_[idx] = raw;
  set_shadow(idx, w.tag);
  if (observer_) observer_(word_addr, raw, w.tag, w.value);
}

std::uint64_t MemorySystem::fill(std::size_t slot, std::uint64_t line_addr, const Key128& key) {
  dcache_.install(slot, line_addr);
  auto data = dcache_.data(slot);
  auto& line = dcache_.line(slot);
  std::uint64_t tagged = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const TaggedWord w = dram_read(line_addr + 8 * i, key);
    data[i] = w.value;
    if (w.tag) {
      line.tags |= 1ULL << i;
      ++tagged;
    }
  }
  ++dram_data_accesses_;
  return config_.costs.dram_access_latency + tag_traffic(line_addr, false) + cipher_cost(tagged);
}

std::uint64_t MemorySystem::writeback(std::size_t slot, const Key128& key) {
  auto& line = dcache_.line(slot);
  const auto data = dcache_.data(slot);
  std::uint64_t tagged = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool tag = (line.tags >> i) & 1;
    dram_write(line.addr + 8 * i, {data[i], tag}, key);
    if (tag) ++tagged;
  }
  line.dirty = false;
  ++dram_data_accesses_;
  return config_.costs.dram_access_latency + tag_traffic(line.addr, true) + cipher_cost(tagged);
}

std::size_t MemorySystem::ensure_line(std::uint64_t line_addr, const Key128& key,
                                      std::uint64_t& cycles) {
  if (auto slot = dcache_.access(line_addr)) return *slot;
  const std::size_t victim = dcache_.victim(line_addr);
  if (dcache_.line(victim).valid && dcache_.line(victim).dirty) {
    cycles += writeback(victim, key);
  }
  cycles += fill(victim, line_addr, key);
  return victim;
}

template <typename Fn>
std::uint64_t MemorySystem::access_word(std::uint64_t word_addr, const Key128& key, Fn&& fn) {
  std::uint64_t cycles = 0;
  bool modified = false;
  TaggedWord w;
  if (config_.caches_enabled) {
    const std::uint64_t line_addr = dcache_.line_of(word_addr);
    const std::size_t slot = ensure_line(line_addr, key, cycles);
    const std::size_t i = (word_addr - line_addr) / 8;
    auto& line = dcache_.line(slot);
    w = {dcache_.data(slot)[i], static_cast<bool>((line.tags >> i) & 1)};
    modified = fn(w);
    if (modified) {
      dcache_.data(slot)[i] = w.value;
      line.tags = (line.tags & ~(1ULL << i)) | (std::uint64_t{w.tag} << i);
      line.dirty = true;
    }
  } else {
    const CycleCosts& c = config_.costs;
    w = dram_read(word_addr, key);
    ++dram_data_accesses_;
    cycles += c.dram_access_latency + tag_traffic(word_addr, false) + cipher_cost(w.tag ? 1 : 0);
    modified = fn(w);
    if (modified) {
      dram_write(word_addr, w, key);
      ++dram_data_accesses_;
      cycles += c.dram_access_latency + tag_traffic(word_addr, true) + cipher_cost(w.tag ? 1 : 0);
    }
  }
  if (modified && audit_) {
    mirror_[index_of(word_addr)] = w.value;
    touch(word_addr);
  }
  return cycles;
}

LoadResult MemorySystem::load(std::uint64_t addr, unsigned width, bool is_signed,
                              const Key128& key) {
  check_access(addr, width, width);
  const std::uint64_t first = addr & ~7ULL;
  const std::uint64_t last = (addr + width - 1) & ~7ULL;
  LoadResult r;
  r.cycles = first == last ? config_.costs.load_hit : config_.costs.load_hit_crossing;
  std::uint64_t value = 0;
  for (std::uint64_t word = first; word <= last; word += 8) {
    TaggedWord w;
    r.cycles += access_word(word, key, [&](TaggedWord& t) {
      w = t;
      return false;
    });
    r.tag = r.tag || w.tag;
    for (unsigned b = 0; b < width; ++b) {
      const std::uint64_t a = addr + b;
      if ((a & ~7ULL) != word) continue;
      value |= ((w.value >> (8 * (a % 8))) & 0xFF) << (8 * b);
    }
  }
  if (is_signed && width < 8) {
    const unsigned bits = 8 * width;
    const std::uint64_t m = 1ULL << (bits - 1);
    value = (value ^ m) - m;
  }
  r.value = value;
  return r;
}

std::uint64_t MemorySystem::store(std::uint64_t addr, unsigned width, std::uint64_t value,
                                  bool tag, std::uint8_t taint, const Key128& key) {
  check_access(addr, width, width);
  const std::uint64_t first = addr & ~7ULL;
  const std::uint64_t last = (addr + width - 1) & ~7ULL;
  const bool full_word = width == 8 && addr % 8 == 0;
  std::uint64_t cycles = config_.costs.store_hit;
  for (std::uint64_t word = first; word <= last; word += 8) {
    const std::uint64_t idx = index_of(word);
    std::uint8_t taint_bits = byte_taint_[idx];
    cycles += access_word(word, key, [&](TaggedWord& t) {
      for (unsigned b = 0; b < width; ++b) {
        const std::uint64_t a = addr + b;
        if ((a & ~7ULL) != word) continue;
        const unsigned shift = 8 * static_cast<unsigned>(a % 8);
        t.value = (t.value & ~(0xFFULL << shift)) | (((value >> (8 * b)) & 0xFF) << shift);
        const std::uint8_t bit = static_cast<std::uint8_t>(1u << (a % 8));
        taint_bits = static_cast<std::uint8_t>(((taint >> b) & 1) ? (taint_bits | bit)
                                                                   : (taint_bits & ~bit));
      }
      t.tag = full_word ? tag : (t.tag || tag);
      return true;
    });
    if (byte_taint_[idx] != taint_bits) {
      byte_taint_[idx] = taint_bits;
      touch(word);
    }
  }
  return cycles;
}

std::uint64_t MemorySystem::tag_set_range(std::uint64_t base, std::uint64_t len,
                                          const Key128& key) {
  if (len == 0) return 0;
  check_access(base, len, 1);
  std::uint64_t cycles = 0;
  const std::uint64_t end = base + len;
  for (std::uint64_t word = base & ~7ULL; word < end; word += 8) {
    // Oracle first, so a writeback triggered by this very access already
    // sees the bytes as sensitive.
    for (std::uint64_t a = std::max(word, base); a < std::min(word + 8, end); ++a) {
      const std::uint64_t idx = index_of(a);
      byte_taint_[idx] = static_cast<std::uint8_t>(byte_taint_[idx] | (1u << (a % 8)));
    }
    cycles += access_word(word, key, [](TaggedWord& t) {
      if (t.tag) return false;
      t.tag = true;
      return true;
    });
    touch(word);
  }
  return cycles;
}

std::uint64_t MemorySystem::tag_clear_range(std::uint64_t base, std::uint64_t len,
                                            const Key128& key) {
  if (len == 0) return 0;
  check_access(base, len, 1);
  std::uint64_t cycles = 0;
  const std::uint64_t end = base + len;
  for (std::uint64_t word = (base + 7) & ~7ULL; word + 8 <= end; word += 8) {
    cycles += access_word(word, key, [](TaggedWord& t) {
      if (!t.tag) return false;
      t.tag = false;
      return true;
    });
  }
  for (std::uint64_t a = base; a < end; ++a) {
    const std::uint64_t idx = index_of(a);
    byte_taint_[idx] = static_cast<std::uint8_t>(byte_taint_[idx] & ~(1u << (a % 8)));
  }
  for (std::uint64_t word = base & ~7ULL; word < end; word += 8) touch(word);
  return cycles;
}

LoadResult MemorySystem::read_tag(std::uint64_t addr, const Key128& key) {
  check_access(addr, 1, 1);
  LoadResult r;
  r.cycles = access_word(addr & ~7ULL, key, [&](TaggedWord& t) {
    r.tag = t.tag;
    return false;
  });
  r.value = r.tag ? 1 : 0;
  return r;
}

FetchResult MemorySystem::fetch(std::uint64_t pc, const Key128& key) {
  if (pc % 4 != 0) {
    throw Trap(TrapKind::kMisalignedAccess, pc, "instruction fetch not 4-byte aligned");
  }
  if (!contains(pc, 4)) {
    throw Trap(TrapKind::kOutOfBoundsAccess, pc, "instruction fetch outside DRAM");
  }
  FetchResult r;
  if (config_.caches_enabled) {
    const std::uint64_t line = icache_.line_of(pc);
    if (!icache_.access(line)) {
      icache_.install(icache_.victim(line), line);
      ++dram_data_accesses_;
      r.cycles += config_.costs.dram_access_latency;
    }
  } else {
    ++dram_data_accesses_;
    r.cycles += config_.costs.dram_access_latency;
  }
  const TaggedWord w = peek_word(pc, key);
  r.word = static_cast<std::uint32_t>(w.value >> (8 * (pc % 8)));
  return r;
}

std::uint64_t MemorySystem::flush_and_sync(const Key128& key) {
  std::uint64_t cycles = 0;
  for (std::size_t s = 0; s < dcache_.slot_count(); ++s) {
    const auto& line = dcache_.line(s);
    if (line.valid && line.dirty) cycles += writeback(s, key);
  }
  dcache_.invalidate_all();
  icache_.invalidate_all();
  if (config_.model == CycleModel::kModelB) {
    for (std::size_t s = 0; s < tag_cache_.slot_count(); ++s) {
      const auto& line = tag_cache_.line(s);
      if (line.valid && line.dirty) {
        ++dram_tag_accesses_;
        cycles += config_.costs.dram_access_latency;
      }
    }
  }
  tag_cache_.invalidate_all();
  return cycles;
}

RawDump MemorySystem::raw_dump(std::uint64_t addr, std::uint64_t len, const Key128& key) {
  if (!contains(addr, len)) {
    throw Trap(TrapKind::kOutOfBoundsAccess, addr, "dump range outside DRAM");
  }
  flush_and_sync(key);
  RawDump d;
  d.base = addr & ~7ULL;
  const std::uint64_t end = (addr + len + 7) & ~7ULL;
  for (std::uint64_t a = d.base; a < end; a += 8) {
    d.words.push_back(dram_word(a));
    d.tags.push_back(shadow_tag(a));
  }
  return d;
}

TaggedWord MemorySystem::peek_word(std::uint64_t addr, const Key128& key) const {
  const std::uint64_t word = addr & ~7ULL;
  if (config_.caches_enabled) {
    const std::uint64_t line_addr = dcache_.line_of(word);
    if (auto slot = dcache_.probe(line_addr)) {
      const std::size_t i = (word - line_addr) / 8;
      return {dcache_.data(*slot)[i], static_cast<bool>((dcache_.line(*slot).tags >> i) & 1)};
    }
  }
  const bool tag = shadow_tag(word);
  const std::uint64_t raw = dram_word(word);
  return {tag ? qarma_decrypt(key, Tweak{word}, raw) : raw, tag};
}

std::vector<std::uint8_t> MemorySystem::peek_bytes(std::uint64_t addr, std::uint64_t len,
                                                   const Key128& key) const {
  std::vector<std::uint8_t> out;
  out.reserve(len);
  for (std::uint64_t a = addr; a < addr + len; ++a) {
    out.push_back(static_cast<std::uint8_t>(peek_word(a, key).value >> (8 * (a % 8))));
  }
  return out;
}

bool MemorySystem::logical_tag(std::uint64_t addr) const {
  const std::uint64_t word = addr & ~7ULL;
  if (config_.caches_enabled) {
    const std::uint64_t line_addr = dcache_.line_of(word);
    if (auto slot = dcache_.probe(line_addr)) {
      return (dcache_.line(*slot).tags >> ((word - line_addr) / 8)) & 1;
    }
  }
  return shadow_tag(word);
}

MemStats MemorySystem::stats() const {
  MemStats s;
  s.dcache = dcache_.stats();
  s.icache = icache_.stats();
  s.tag_cache = tag_cache_.stats();
  s.dram_data_accesses = dram_data_accesses_;
  s.dram_tag_accesses = dram_tag_accesses_;
  s.cipher_blocks = cipher_blocks_;
  return s;
}

void MemorySystem::enable_audit() {
  if (audit_) return;
  audit_ = true;
  mirror_ = dram_;
  owner_.assign(dram_.size(), kNoOwner);
}

std::vector<std::uint64_t> MemorySystem::take_touched_words() {
  std::vector<std::uint64_t> out;
  out.swap(touched_);
  return out;
}

std::uint64_t MemorySystem::audit_ciphertext_invariant() const {
  if (!audit_) return 0;
  std::uint64_t violations = 0;
  for (std::uint64_t idx = 0; idx < dram_.size(); ++idx) {
    const std::uint64_t addr = config_.dram_base + 8 * idx;
    if (config_.caches_enabled && dcache_.probe(dcache_.line_of(addr))) continue;
    if (shadow_tag(addr)) {
      if (owner_[idx] == kNoOwner ||
          qarma_encrypt(audit_keys_[owner_[idx]], Tweak{addr}, mirror_[idx]) != dram_[idx]) {
        ++violations;
      }
    } else if (dram_[idx] != mirror_[idx]) {
      ++violations;
    }
  }
  return violations;
}

}  // namespace conch

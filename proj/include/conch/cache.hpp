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

#ifndef CONCH_CACHE_HPP_
#define CONCH_CACHE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace conch {

struct CacheGeometry {
  std::uint64_t size_bytes = 32 * 1024;
  unsigned ways = 8;
  unsigned line_bytes = 64;

  std::uint64_t sets() const { return size_bytes / (std::uint64_t{ways} * line_bytes); }
  unsigned words_per_line() const { return line_bytes / 8; }

  // Throws std::invalid_argument unless sets * ways * line == size, the line
  // holds 1..64 whole words and the set count is a power of two.
  void validate() const;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;

  friend bool operator==(const CacheStats&, const CacheStats&) = default;
};

// Set-associative, write-back, LRU cache. It only tracks placement; the memory
// system decides what fills and writebacks mean. Each line carries plaintext
// words and one sensitivity bit per word.
class CacheModel {
 public:
  struct Line {
    bool valid = false;
    bool dirty = false;
    std::uint64_t addr = 0;  // line-aligned byte address
    std::uint64_t lru = 0;   // larger = more recently used
    std::uint64_t tags = 0;  // bit i = word i is sensitive
  };

  explicit CacheModel(CacheGeometry geometry);

  const CacheGeometry& geometry() const { return geometry_; }
  std::uint64_t line_of(std::uint64_t addr) const {
    return addr & ~std::uint64_t{geometry_.line_bytes - 1};
  }

  // Hit: refreshes LRU, counts a hit, returns the line slot. Miss: counts a
  // miss and returns nullopt.
  std::optional<std::size_t> access(std::uint64_t line_addr);

  // Presence check with no side effects.
  std::optional<std::size_t> probe(std::uint64_t line_addr) const;

  // Slot to fill for `line_addr`: an invalid way if any, else the LRU way.
  std::size_t victim(std::uint64_t line_addr) const;

  // Marks `slot` as holding `line_addr` (clean, most recently used). The
  // caller must have written back the previous occupant if it was dirty.
  void install(std::size_t slot, std::uint64_t line_addr);

  Line& line(std::size_t slot) { return lines_[slot]; }
  const Line& line(std::size_t slot) const { return lines_[slot]; }
  std::span<std::uint64_t> data(std::size_t slot);
  std::span<const std::uint64_t> data(std::size_t slot) const;

  std::size_t slot_count() const { return lines_.size(); }
  void invalidate_all();

  const CacheStats& stats() const { return stats_; }

 private:
  std::size_t set_index(std::uint64_t line_addr) const;

  CacheGeometry geometry_;
  std::vector<Line> lines_;
  std::vector<std::uint64_t> data_;
  std::uint64_t clock_ = 0;
  CacheStats stats_;
};

}  // namespace conch

#endif  // CONCH_CACHE_HPP_

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

#include "conch/cache.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace conch {

void CacheGeometry::validate() const {
  if (ways == 0 || line_bytes == 0 || size_bytes == 0) {
    throw std::invalid_argument("cache geometry must be non-zero");
  }
  if (line_bytes % 8 != 0 || line_bytes > 512 || !std::has_single_bit(line_bytes)) {
    throw std::invalid_argument("cache line must be a power of two of 8..512 bytes");
  }
  if (size_bytes % (std::uint64_t{ways} * line_bytes) != 0) {
    throw std::invalid_argument("cache size must be a multiple of ways * line size");
  }
  if (!std::has_single_bit(sets())) {
    throw std::invalid_argument("cache set count must be a power of two, got " +
                                std::to_string(sets()));
  }
}

CacheModel::CacheModel(CacheGeometry geometry) : geometry_(geometry) {
  geometry_.validate();
  lines_.resize(geometry_.sets() * geometry_.ways);
  data_.resize(lines_.size() * geometry_.words_per_line());
}

std::size_t CacheModel::set_index(std::uint64_t line_addr) const {
  return static_cast<std::size_t>((line_addr / geometry_.line_bytes) & (geometry_.sets() - 1));
}

std::optional<std::size_t> CacheModel::probe(std::uint64_t line_addr) const {
  const std::size_t first = set_index(line_addr) * geometry_.ways;
  for (std::size_t s = first; s < first + geometry_.ways; ++s) {
    if (lines_[s].valid && lines_[s].addr == line_addr) return s;
  }
  return std::nullopt;
}

std::optional<std::size_t> CacheModel::access(std::uint64_t line_addr) {
  if (auto slot = probe(line_addr)) {
    lines_[*slot].lru = ++clock_;
    ++stats_.hits;
    return slot;
  }
  ++stats_.misses;
  return std::nullopt;
}

std::size_t CacheModel::victim(std::uint64_t line_addr) const {
  const std::size_t first = set_index(line_addr) * geometry_.ways;
  std::size_t best = first;
  for (std::size_t s = first; s < first + geometry_.ways; ++s) {
    if (!lines_[s].valid) return s;
    if (lines_[s].lru < lines_[best].lru) best = s;
  }
  return best;
}

void CacheModel::install(std::size_t slot, std::uint64_t line_addr) {
  Line& l = lines_[slot];
  l.valid = true;
  l.dirty = false;
  l.addr = line_addr;
  l.lru = ++clock_;
  l.tags = 0;
}

std::span<std::uint64_t> CacheModel::data(std::size_t slot) {
  const std::size_t n = geometry_.words_per_line();
  return {data_.data() + slot * n, n};
}

std::span<const std::uint64_t> CacheModel::data(std::size_t slot) const {
  const std::size_t n = geometry_.words_per_line();
  return {data_.data() + slot * n, n};
}

void CacheModel::invalidate_all() {
  for (auto& l : lines_) l = Line{};
}

}  // namespace conch

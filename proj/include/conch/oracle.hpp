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

// Byte-granularity golden taint reference.
//
// Memory bytes are tracked by MemorySystem (one mask per word, bit i = byte
// i). This class holds the per-register masks and the propagation rules:
// loads and stores move taint positionally, ALU results collapse to all or
// nothing, and immediates, pc-derived values and syscall results are clean.

#ifndef CONCH_ORACLE_HPP_
#define CONCH_ORACLE_HPP_

#include <array>
#include <cstdint>

namespace conch {

class ByteOracle {
 public:
  std::uint8_t reg(unsigned r) const { return regs_[r]; }
  void set_reg(unsigned r, std::uint8_t mask) {
    if (r != 0) regs_[r] = mask;
  }
  void clear() { regs_.fill(0); }

  static std::uint8_t alu(std::uint8_t a, std::uint8_t b = 0) {
    return (a | b) ? 0xFF : 0x00;
  }

  // `mem_mask` bit i = taint of loaded byte i. Signed loads fill the upper
  // bytes with the taint of the top loaded byte.
  static std::uint8_t load(std::uint8_t mem_mask, unsigned width, bool is_signed) {
    const unsigned keep = width >= 8 ? 0xFF : (1u << width) - 1;
    std::uint8_t m = static_cast<std::uint8_t>(mem_mask & keep);
    if (is_signed && width < 8 && ((m >> (width - 1)) & 1)) {
      m = static_cast<std::uint8_t>(m | ~keep);
    }
    return m;
  }

  // Taint of the `width` low register bytes being stored.
  static std::uint8_t store(std::uint8_t reg_mask, unsigned width) {
    return width >= 8 ? reg_mask : static_cast<std::uint8_t>(reg_mask & ((1u << width) - 1));
  }

 private:
  std::array<std::uint8_t, 32> regs_{};
};

}  // namespace conch

#endif  // CONCH_ORACLE_HPP_

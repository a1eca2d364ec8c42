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

#ifndef CONCH_TYPES_HPP_
#define CONCH_TYPES_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace conch {

// A 64-bit value and its one-bit sensitivity tag.
struct TaggedWord {
  std::uint64_t value = 0;
  bool tag = false;

  friend bool operator==(const TaggedWord&, const TaggedWord&) = default;
};

enum class TrapKind {
  kIllegalInstruction,
  kMisalignedAccess,
  kOutOfBoundsAccess,
  kBreakpoint,
};

std::string_view to_string(TrapKind kind);

// Synchronous fault raised while executing an instruction. The machine halts
// with a diagnostic; there is no simulated trap handler.
class Trap : public std::runtime_error {
 public:
  Trap(TrapKind kind, std::uint64_t addr, const std::string& what);

  TrapKind kind() const { return kind_; }
  std::uint64_t addr() const { return addr_; }

 private:
  TrapKind kind_;
  std::uint64_t addr_;
};

}  // namespace conch

#endif  // CONCH_TYPES_HPP_

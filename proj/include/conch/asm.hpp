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

// Two-pass mini-assembler for the simulator's RISC-V subset.
//
// Grammar, one statement per line:
//   [label:]... [mnemonic operands | directive args] [# comment]
// Directives: .text .data .org .align .byte .half .word .dword .asciz
//             .ascii .zero/.space .globl/.global
// Numeric branch/jump operands are pc-relative byte offsets; label operands
// are resolved to absolute addresses. There is no expression syntax.

#ifndef CONCH_ASM_HPP_
#define CONCH_ASM_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace conch {

inline constexpr std::uint64_t kDefaultTextBase = 0x8000'0000;
inline constexpr std::uint64_t kDefaultDataBase = 0x8010'0000;

struct SourceLine {
  int number = 0;
  std::string text;
};

struct SourceUnit {
  std::vector<SourceLine> lines;
  std::string origin;

  static SourceUnit from_text(std::string_view text, std::string origin);
  static SourceUnit from_file(const std::string& path);
};

enum class SegmentKind : std::uint8_t { kText = 0, kData = 1 };

struct Segment {
  std::uint64_t base = 0;
  std::vector<std::uint8_t> bytes;
  SegmentKind kind = SegmentKind::kText;

  std::uint64_t end() const { return base + bytes.size(); }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Program {
  std::vector<Segment> segments;  // sorted by base, non-overlapping
  std::uint64_t entry = kDefaultTextBase;
  std::map<std::string, std::uint64_t> symbols;

  friend bool operator==(const Program&, const Program&) = default;
};

enum class AsmErrorKind {
  kUnknownMnemonic,
  kUndefinedLabel,
  kDuplicateLabel,
  kImmediateOutOfRange,
  kMisalignedTarget,
  kSyntax,
  kOverlappingSegments,
};

std::string_view to_string(AsmErrorKind kind);

class AsmError : public std::runtime_error {
 public:
  AsmError(AsmErrorKind kind, int line, const std::string& message);

  AsmErrorKind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  AsmErrorKind kind_;
  int line_;
};

Program assemble(const SourceUnit& src);

// Convenience wrapper for inline sources.
inline Program assemble(std::string_view text) {
  return assemble(SourceUnit::from_text(text, "<inline>"));
}

// Binary image: "CONCHIMG" magic, u32 version, u64 entry, u32 segment count,
// then per segment {u64 base, u8 kind, u64 size, bytes}, then u32 symbol
// count and per symbol {u32 name length, name, u64 address}. Little endian.
void write_image(const Program& program, std::ostream& out);
Program read_image(std::istream& in);
bool looks_like_image(std::istream& in);

}  // namespace conch

#endif  // CONCH_ASM_HPP_

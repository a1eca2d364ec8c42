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

#include "conch/asm.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include "conch/isa.hpp"
#include "test_util.hpp"

namespace conch {
namespace {

std::uint32_t word_at(const Program& p, std::uint64_t addr) {
  for (const Segment& s : p.segments) {
    if (addr >= s.base && addr + 4 <= s.end()) {
      const auto* b = &s.bytes[addr - s.base];
      return b[0] | b[1] << 8 | b[2] << 16 | static_cast<std::uint32_t>(b[3]) << 24;
    }
  }
  ADD_FAILURE() << "no word at " << std::hex << addr;
  return 0;
}

AsmError error_of(const std::string& src) {
  try {
    assemble(src);
  } catch (const AsmError& e) {
    return e;
  }
  ADD_FAILURE() << "assembled without error:\n" << src;
  return AsmError(AsmErrorKind::kSyntax, -1, "none");
}

TEST(AsmTest, ErrorsCarryKindAndLine) {
  struct Case {
    std::string src;
    AsmErrorKind kind;
    int line;
  };
  const Case cases[] = {
      {".text\nnop\nfrobnicate x1, x2\n", AsmErrorKind::kUnknownMnemonic, 3},
      {".text\n  j nowhere\n", AsmErrorKind::kUndefinedLabel, 2},
      {"a:\nnop\na:\nnop\n", AsmErrorKind::kDuplicateLabel, 3},
      {"addi x1, x0, 2048\n", AsmErrorKind::kImmediateOutOfRange, 1},
      {"nop\naddi x1, x0, -2049\n", AsmErrorKind::kImmediateOutOfRange, 2},
      {"slli x1, x1, 64\n", AsmErrorKind::kImmediateOutOfRange, 1},
      {"slliw x1, x1, 32\n", AsmErrorKind::kImmediateOutOfRange, 1},
      {"beq x1, x2, 6\n", AsmErrorKind::kMisalignedTarget, 1},
      {"jal x0, 2\n", AsmErrorKind::kMisalignedTarget, 1},
      {"beq x1, x2, 4096\n", AsmErrorKind::kImmediateOutOfRange, 1},
      {"add x1, x2\n", AsmErrorKind::kSyntax, 1},
      {"add x1, x2, x40\n", AsmErrorKind::kSyntax, 1},
      {"ld x1, 8[x2]\n", AsmErrorKind::kSyntax, 1},
      {".data\n.asciz \"open\n", AsmErrorKind::kSyntax, 2},
      {".bogus 3\n", AsmErrorKind::kUnknownMnemonic, 1},
      {"csrrw x0, mscratch, x2\n", AsmErrorKind::kUnknownMnemonic, 1},
  };
  for (const Case& c : cases) {
    const AsmError e = error_of(c.src);
    EXPECT_EQ(e.kind(), c.kind) << c.src << " -> " << e.what();
    EXPECT_EQ(e.line(), c.line) << c.src << " -> " << e.what();
    EXPECT_NE(std::string(e.what()).find("line " + std::to_string(c.line)), std::string::npos);
  }
}

TEST(AsmTest, OverlappingSegmentsRejected) {
  const AsmError e = error_of(".text\nnop\nnop\n.data\n.org 0x80000004\n.dword 1\n");
  EXPECT_EQ(e.kind(), AsmErrorKind::kOverlappingSegments);
}

TEST(AsmTest, LabelsResolveForwardAndBackward) {
  const Program p = assemble(
      ".text\n"
      "start: beq x0, x0, fwd\n"
      "       nop\n"
      "fwd:   jal x1, start\n");
  EXPECT_EQ(p.entry, kDefaultTextBase);
  EXPECT_EQ(p.symbols.at("fwd"), kDefaultTextBase + 8);
  EXPECT_EQ(word_at(p, kDefaultTextBase), encode({Op::kBeq, 0, 0, 0, 8}));
  EXPECT_EQ(word_at(p, kDefaultTextBase + 8), encode({Op::kJal, 1, 0, 0, -8}));
}

TEST(AsmTest, EntryIsStartLabel) {
  const Program p = assemble(".text\nnop\n_start: nop\n");
  EXPECT_EQ(p.entry, kDefaultTextBase + 4);
}

TEST(AsmTest, PseudoInstructionsExpand) {
  const Program p = assemble(
      ".text\n"
      "nop\n"             // +0
      "mv a0, a1\n"       // +4
      "ret\n"             // +8
      "la t0, buf\n"      // +12, two words
      "beqz a0, 0\n"      // +20
      ".data\nbuf: .dword 7\n");
  const std::uint64_t t = kDefaultTextBase;
  EXPECT_EQ(word_at(p, t + 0), 0x00000013u);
  EXPECT_EQ(word_at(p, t + 4), 0x00058513u);
  EXPECT_EQ(word_at(p, t + 8), 0x00008067u);
  const auto auipc = decode(word_at(p, t + 12));
  const auto addi = decode(word_at(p, t + 16));
  ASSERT_TRUE(auipc && addi);
  EXPECT_EQ(auipc->op, Op::kAuipc);
  EXPECT_EQ(addi->op, Op::kAddi);
  EXPECT_EQ(t + 12 + auipc->imm + addi->imm, kDefaultDataBase);
  EXPECT_EQ(word_at(p, t + 20), encode({Op::kBeq, 0, 10, 0, 0}));
}

// `li` must materialize every constant exactly; checked by executing the
// expansion on the simulator.
TEST(AsmTest, LiMaterializesConstants) {
  std::mt19937_64 rng(99);
  std::vector<std::int64_t> values = {0,          1,          -1,         2047,
                                      -2048,      2048,       0x7FFFFFFF, -0x80000000LL,
                                      0x80000000, 0xFFFFFFFF, INT64_MAX,  INT64_MIN,
                                      0x123456789ABCDEF0LL};
  for (int i = 0; i < 40; ++i) values.push_back(static_cast<std::int64_t>(rng()));
  std::string src = ".text\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    src += "li t0, " + std::to_string(values[i]) + "\n";
    src += "la t1, out\n";
    src += "sd t0, " + std::to_string(i * 8) + "(t1)\n";
  }
  src += "li a0, 0\nli a7, 93\necall\n.data\nout: .zero " + std::to_string(values.size() * 8) +
         "\n";
  auto m = testing::boot(src);
  ASSERT_EQ(m->run(100000).status, RunStatus::kHalted);
  for (std::size_t i = 0; i < values.size(); ++i) {
    EXPECT_EQ(m->mem().peek_word(kDefaultDataBase + i * 8, {}).value,
              static_cast<std::uint64_t>(values[i]))
        << values[i];
  }
}

TEST(AsmTest, DataDirectives) {
  const Program p = assemble(
      ".data\n"
      "b: .byte 1, 0xff\n"
      "h: .half 0x1234\n"
      "w: .word -1\n"
      ".align 3\n"
      "d: .dword 0x1122334455667788\n"
      "s: .asciz \"a\\n\"\n");
  const Segment& s = p.segments.at(0);
  EXPECT_EQ(s.kind, SegmentKind::kData);
  EXPECT_EQ(s.base, kDefaultDataBase);
  EXPECT_EQ(p.symbols.at("h"), kDefaultDataBase + 2);
  EXPECT_EQ(p.symbols.at("d"), kDefaultDataBase + 8);
  EXPECT_EQ(s.bytes[0], 1);
  EXPECT_EQ(s.bytes[1], 0xff);
  EXPECT_EQ(s.bytes[2], 0x34);
  EXPECT_EQ(s.bytes[4], 0xff);
  EXPECT_EQ(s.bytes[8], 0x88);
  EXPECT_EQ(s.bytes[15], 0x11);
  EXPECT_EQ(s.bytes[16], 'a');
  EXPECT_EQ(s.bytes[17], '\n');
  EXPECT_EQ(s.bytes[18], 0);
}

TEST(AsmTest, DwordLoadsBackThroughSimulator) {
  auto m = testing::boot(
      ".text\n"
      "la t0, v\n"
      "ld a0, 0(t0)\n"
      "srli a0, a0, 56\n"
      "li a7, 93\n"
      "ecall\n"
      ".data\n"
      "v: .dword 0x2A00000000000001\n");
  const RunResult r = m->run(1000);
  ASSERT_EQ(r.status, RunStatus::kHalted);
  EXPECT_EQ(r.exit_code, 0x2A);
}

TEST(AsmTest, CommentsAndCaseAreIgnored) {
  const Program a = assemble(".text\nADDI a0, zero, 5 # five\n");
  const Program b = assemble(".text\naddi x10, x0, 5\n");
  EXPECT_EQ(a.segments, b.segments);
}

TEST(AsmTest, AssemblyIsDeterministic) {
  for (const auto& entry : std::filesystem::directory_iterator(CONCH_PROGRAMS_DIR)) {
    if (entry.path().extension() != ".s") continue;
    const SourceUnit src = SourceUnit::from_file(entry.path().string());
    EXPECT_EQ(assemble(src), assemble(src)) << entry.path();
  }
}

TEST(AsmTest, ImageRoundTrip) {
  for (const auto& entry : std::filesystem::directory_iterator(CONCH_PROGRAMS_DIR)) {
    if (entry.path().extension() != ".s") continue;
    const Program p = assemble(SourceUnit::from_file(entry.path().string()));
    std::stringstream buf;
    write_image(p, buf);
    const std::string bytes = buf.str();
    std::stringstream probe(bytes);
    EXPECT_TRUE(looks_like_image(probe));
    std::stringstream in(bytes);
    EXPECT_EQ(read_image(in), p) << entry.path();
  }
  std::stringstream text(".text\nnop\n");
  EXPECT_FALSE(looks_like_image(text));
}

TEST(AsmTest, TruncatedImageRejected) {
  const Program p = assemble(".text\nnop\nnop\n");
  std::stringstream buf;
  write_image(p, buf);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream in(bytes);
  EXPECT_ANY_THROW(read_image(in));
}

}  // namespace
}  // namespace conch

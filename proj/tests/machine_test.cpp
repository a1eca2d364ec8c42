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

#include "conch/machine.hpp"

#include <gtest/gtest.h>

#include <string>

#include "conch/oracle.hpp"
#include "test_util.hpp"

namespace conch {
namespace {

using testing::boot;
using testing::small_config;

constexpr const char* kExit = "li a7, 93\necall\n";

TEST(MachineTest, ZeroRegisterStaysZero) {
  auto m = boot(std::string(".text\naddi x0, x0, 5\nli t0, 0x80100000\nli t1, 8\n"
                            "ctag.set t0, t1\n"
                            "ld x0, 0(t0)\nmv a0, x0\n") + kExit);
  const RunResult r = m->run(100);
  ASSERT_EQ(r.status, RunStatus::kHalted) << r.diagnostic;
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(m->state().reg(0), TaggedWord{});
  EXPECT_EQ(m->oracle().reg(0), 0);
}

TEST(MachineTest, TagPropagationRules) {
  Instruction add{Op::kAdd, 1, 2, 3, 0};
  EXPECT_FALSE(propagate_tag(add, false, false));
  EXPECT_TRUE(propagate_tag(add, true, false));
  EXPECT_TRUE(propagate_tag(add, false, true));
  Instruction addi{Op::kAddi, 1, 2, 0, 1};
  EXPECT_TRUE(propagate_tag(addi, true, false));
  EXPECT_FALSE(propagate_tag(addi, false, true));
  EXPECT_FALSE(propagate_tag({Op::kLui, 1, 0, 0, 0x1000}, true, true));
  EXPECT_FALSE(propagate_tag({Op::kJal, 1, 0, 0, 8}, true, true));
  EXPECT_FALSE(propagate_tag({Op::kCtagRdt, 1, 2, 0, 0}, true, true));
}

TEST(MachineTest, TaggedLoadFlowsThroughAluAndStore) {
  auto m = boot(std::string(
                    ".text\n"
                    "la t0, secret\n"
                    "li t1, 8\n"
                    "ctag.set t0, t1\n"
                    "ld a1, 0(t0)\n"     // tagged
                    "addi a2, a1, 1\n"   // tagged
                    "add a3, a2, zero\n" // tagged
                    "lui a4, 1\n"        // clean
                    "sd a3, 8(t0)\n"     // full store: word 1 becomes tagged
                    "sd a4, 0(t0)\n"     // full clean store clears word 0
                    "ctag.rdt a5, t0\n"
                    "addi t2, t0, 8\n"
                    "ctag.rdt a6, t2\n"
                    "li a0, 0\n") +
                kExit + ".data\nsecret: .dword 41, 0\n");
  const RunResult r = m->run(100);
  ASSERT_EQ(r.status, RunStatus::kHalted) << r.diagnostic;
  const MachineState& s = m->state();
  EXPECT_TRUE(s.reg(11).tag);
  EXPECT_TRUE(s.reg(12).tag);
  EXPECT_EQ(s.reg(12).value, 42u);
  EXPECT_TRUE(s.reg(13).tag);
  EXPECT_FALSE(s.reg(14).tag);
  EXPECT_EQ(s.reg(15).value, 0u);
  EXPECT_EQ(s.reg(16).value, 1u);
  EXPECT_FALSE(s.reg(15).tag);  // the tag bit read back is not itself sensitive
  EXPECT_EQ(m->oracle().reg(13), 0xFF);
  EXPECT_EQ(m->oracle().reg(14), 0x00);
  EXPECT_EQ(m->oracle().reg(15), 0x00);
}

TEST(MachineTest, ByteOracleRules) {
  EXPECT_EQ(ByteOracle::alu(0, 0), 0);
  EXPECT_EQ(ByteOracle::alu(0x01, 0), 0xFF);
  EXPECT_EQ(ByteOracle::alu(0, 0x80), 0xFF);
  EXPECT_EQ(ByteOracle::load(0b1010, 4, false), 0b1010);
  EXPECT_EQ(ByteOracle::load(0b1010, 4, true), 0xFA);
  EXPECT_EQ(ByteOracle::load(0b0101, 4, true), 0x05);
  EXPECT_EQ(ByteOracle::load(0xFF, 1, false), 0x01);
  EXPECT_EQ(ByteOracle::store(0xFF, 2), 0x03);
  EXPECT_EQ(ByteOracle::store(0x3C, 8), 0x3C);
}

TEST(MachineTest, BudgetExceeded) {
  auto m = boot(".text\nloop: j loop\n");
  const RunResult r = m->run(1000);
  EXPECT_EQ(r.status, RunStatus::kBudgetExceeded);
  EXPECT_FALSE(r.exit_code.has_value());
  EXPECT_EQ(m->state().instret, 1000u);
}

TEST(MachineTest, IllegalInstructionTraps) {
  auto m = boot(".text\nnop\n.word 0\n");
  const RunResult r = m->run(1000);
  EXPECT_EQ(r.status, RunStatus::kTrapped);
  EXPECT_NE(r.diagnostic.find("IllegalInstruction"), std::string::npos) << r.diagnostic;
  EXPECT_EQ(m->state().pc, kDefaultTextBase + 4);
}

TEST(MachineTest, OutOfBoundsAndBreakpointTrap) {
  auto oob = boot(".text\nli t0, 0x10\nld a0, 0(t0)\n");
  const RunResult r = oob->run(100);
  EXPECT_EQ(r.status, RunStatus::kTrapped);
  EXPECT_NE(r.diagnostic.find("OutOfBounds"), std::string::npos) << r.diagnostic;

  auto brk = boot(".text\nebreak\n");
  EXPECT_EQ(brk->run(100).status, RunStatus::kTrapped);
}

TEST(MachineTest, LoadImageChecks) {
  Machine m(small_config());
  Program p = assemble(".text\nnop\n");
  p.segments[0].base = 0x1000;
  p.entry = 0x1000;
  EXPECT_THROW(m.load_image(p), LoadError);
  Machine ok(small_config());
  ok.load_image(assemble(".text\nnop\n"));
  EXPECT_EQ(ok.state().pc, kDefaultTextBase);
  EXPECT_EQ(ok.state().reg(2).value, ok.mem().dram_end() - 256);
}

TEST(MachineTest, DivisionEdgeCases) {
  auto m = boot(std::string(
                    ".text\n"
                    "li t0, 7\n"
                    "div a1, t0, zero\n"   // -1
                    "remu a2, t0, zero\n"  // 7
                    "li t1, -1\n"
                    "li t2, 0x8000000000000000\n"
                    "div a3, t2, t1\n"     // overflow: dividend
                    "rem a4, t2, t1\n"     // 0
                    "mulh a5, t2, t2\n"    // 2^62
                    "divw a6, t0, zero\n"  // -1
                    "li a0, 0\n") +
                kExit);
  ASSERT_EQ(m->run(100).status, RunStatus::kHalted);
  const MachineState& s = m->state();
  EXPECT_EQ(s.reg(11).value, ~0ULL);
  EXPECT_EQ(s.reg(12).value, 7u);
  EXPECT_EQ(s.reg(13).value, 0x8000000000000000ULL);
  EXPECT_EQ(s.reg(14).value, 0u);
  EXPECT_EQ(s.reg(15).value, 1ULL << 62);
  EXPECT_EQ(s.reg(16).value, ~0ULL);
}

TEST(MachineTest, CycleAccountingOfStraightLineCode) {
  // One icache miss (60) + addi (1) + mul (3) + div (33) + ecall (1).
  auto m = boot(".text\naddi a0, zero, 6\nmul a0, a0, a0\ndiv a0, a0, a0\nli a7, 93\necall\n");
  ASSERT_EQ(m->run(100).status, RunStatus::kHalted);
  EXPECT_EQ(m->state().instret, 5u);
  EXPECT_EQ(m->state().cycles, 60u + 1 + 3 + 33 + 1 + 1);
  EXPECT_EQ(m->state().histogram[static_cast<std::size_t>(Op::kEcall)], 1u);
}

TEST(MachineTest, BranchPredictorCosts) {
  // Forward not-taken is predicted; backward taken is predicted.
  auto m = boot(std::string(
                    ".text\n"
                    "li t0, 3\n"
                    "loop: addi t0, t0, -1\n"
                    "bnez t0, loop\n"  // taken twice (predicted), falls through once (miss)
                    "beqz t0, skip\n"  // forward taken: mispredicted
                    "nop\n"
                    "skip: li a0, 0\n") +
                kExit);
  ASSERT_EQ(m->run(100).status, RunStatus::kHalted);
  // 60 icache + li + 3 addi + 2 predicted + 2 mispredicted (1 + 3 each) + li + li + ecall.
  EXPECT_EQ(m->state().cycles, 60u + 1 + 3 + 2 + 4 + 4 + 1 + 1 + 1);
}

TEST(MachineTest, DeterministicAcrossRuns) {
  const std::string src = testing::read_text(testing::program_path("fib.s"));
  auto a = boot(src);
  auto b = boot(src);
  const RunResult ra = a->run(1'000'000);
  const RunResult rb = b->run(1'000'000);
  EXPECT_EQ(ra.exit_code, rb.exit_code);
  EXPECT_EQ(a->state().cycles, b->state().cycles);
  EXPECT_EQ(compare_architectural_state(*a, *b), "");
}

TEST(MachineTest, ModelsShareArchitecturalState) {
  const std::string src = testing::read_text(testing::program_path("copyout.s"));
  OsConfig os;
  const std::string rec = "SECRETS-0123456789abcdefghijklmn";
  os.files["/record"] = {rec.begin(), rec.end()};
  std::unique_ptr<Machine> runs[3];
  int i = 0;
  for (CycleModel model : {CycleModel::kBaseline, CycleModel::kModelA, CycleModel::kModelB}) {
    MachineConfig c = small_config(model);
    c.os = os;
    c.audit = true;
    runs[i] = boot(src, c);
    ASSERT_EQ(runs[i]->run(1'000'000).status, RunStatus::kHalted);
    EXPECT_EQ(runs[i]->audit().memory_under_tag, 0u);
    EXPECT_EQ(runs[i]->audit().register_under_tag, 0u);
    EXPECT_EQ(runs[i]->audit().ciphertext_violations, 0u);
    ++i;
  }
  EXPECT_EQ(compare_architectural_state(*runs[0], *runs[1]), "");
  EXPECT_EQ(compare_architectural_state(*runs[0], *runs[2]), "");
  EXPECT_LT(runs[0]->state().cycles, runs[2]->state().cycles);
  EXPECT_LT(runs[2]->state().cycles, runs[1]->state().cycles);
}

TEST(MachineTest, CompareDetectsDifferences) {
  auto a = boot(".text\nli a0, 1\nli a7, 93\necall\n");
  auto b = boot(".text\nli a0, 2\nli a7, 93\necall\n");
  a->run(10);
  b->run(10);
  EXPECT_NE(compare_architectural_state(*a, *b), "");
}

}  // namespace
}  // namespace conch

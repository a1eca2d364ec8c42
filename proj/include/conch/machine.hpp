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

// Tagged RV64IM hart.
//
// Every register carries a tag. ALU results take the OR of the source tags,
// lui/auipc and link values are untagged, loads and stores move tags through
// the memory system. Branches never taint pc (no implicit flows).

#ifndef CONCH_MACHINE_HPP_
#define CONCH_MACHINE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "conch/asm.hpp"
#include "conch/crypt.hpp"
#include "conch/isa.hpp"
#include "conch/mem.hpp"
#include "conch/oracle.hpp"
#include "conch/os.hpp"
#include "conch/types.hpp"

namespace conch {

struct MachineState {
  std::uint64_t pc = 0;
  std::array<TaggedWord, 32> regs{};
  // Micro-architectural key registers. No instruction can name them.
  Key128 master_key;
  Key128 thread_key;
  std::uint64_t current_tid = 0;
  std::uint64_t instret = 0;
  std::uint64_t cycles = 0;  // under the machine's configured model
  std::array<std::uint64_t, kOpCount> histogram{};
  bool halted = false;
  std::int64_t exit_code = 0;

  const TaggedWord& reg(unsigned r) const { return regs[r]; }
  void set_reg(unsigned r, TaggedWord w) {
    if (r != 0) regs[r] = w;
  }
};

// Tag of an ALU/upper/jump destination given the tags of the sources read.
bool propagate_tag(const Instruction& instr, bool src1, bool src2);

struct MachineConfig {
  MemoryConfig mem;
  OsConfig os;
  std::uint64_t seed = 0;
  // Check soundness after every step and the ciphertext invariant after every
  // flush. Slow; meant for tests.
  bool audit = false;
  std::uint64_t stack_reserve = 256;
};

enum class RunStatus { kHalted, kTrapped, kBudgetExceeded };

std::string_view to_string(RunStatus status);

struct RunResult {
  RunStatus status = RunStatus::kHalted;
  std::optional<std::int64_t> exit_code;
  std::string diagnostic;
};

struct AuditCounters {
  std::uint64_t steps_checked = 0;
  std::uint64_t memory_under_tag = 0;    // word tag 0 but an oracle byte tainted
  std::uint64_t register_under_tag = 0;  // same, for registers
  std::uint64_t ciphertext_violations = 0;
  std::uint64_t flush_checks = 0;
};

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Machine {
 public:
  explicit Machine(const MachineConfig& config);

  // Copies segments into DRAM (tags cleared), sets pc, sp and clears all
  // register state. Throws LoadError for segments outside DRAM or overlapping.
  void load_image(const Program& program);

  // Executes one instruction. Throws Trap. Returns false once halted.
  bool step();

  // Steps until halt, trap or `max_instret` retired instructions, then calls
  // finish(). Never throws Trap.
  RunResult run(std::uint64_t max_instret);

  // Final flush so DRAM holds the at-rest image. Not charged to cycles.
  void finish();

  const MachineState& state() const { return st_; }
  MachineState& state() { return st_; }
  MemorySystem& mem() { return mem_; }
  const MemorySystem& mem() const { return mem_; }
  OsShim& os() { return os_; }
  const OsShim& os() const { return os_; }
  const ByteOracle& oracle() const { return oracle_; }
  const AuditCounters& audit() const { return audit_; }
  const MachineConfig& config() const { return config_; }

 private:
  std::uint64_t exec(const Instruction& in, std::uint64_t& next_pc);
  std::uint64_t exec_alu(const Instruction& in);
  void audit_step();
  void audit_flush();

  MachineConfig config_;
  MachineState st_;
  MemorySystem mem_;
  OsShim os_;
  ByteOracle oracle_;
  AuditCounters audit_;
};

// Architectural comparison: pc, registers (value and tag), halt state, exit
// code, raw DRAM and shadow tags. Call after finish() on both. Returns an
// empty string when equal, else a description of the first difference.
std::string compare_architectural_state(const Machine& a, const Machine& b);

}  // namespace conch

#endif  // CONCH_MACHINE_HPP_

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

#include <cstdio>
#include <limits>

namespace conch {
namespace {

__extension__ typedef __int128 i128;
__extension__ typedef unsigned __int128 u128;

std::int64_t sext32(std::uint64_t v) { return static_cast<std::int32_t>(static_cast<std::uint32_t>(v)); }

std::uint64_t div_signed(std::int64_t a, std::int64_t b) {
  if (b == 0) return ~0ULL;
  if (a == std::numeric_limits<std::int64_t>::min() && b == -1) return static_cast<std::uint64_t>(a);
  return static_cast<std::uint64_t>(a / b);
}

std::uint64_t rem_signed(std::int64_t a, std::int64_t b) {
  if (b == 0) return static_cast<std::uint64_t>(a);
  if (a == std::numeric_limits<std::int64_t>::min() && b == -1) return 0;
  return static_cast<std::uint64_t>(a % b);
}

std::int32_t div32(std::int32_t a, std::int32_t b) {
  if (b == 0) return -1;
  if (a == std::numeric_limits<std::int32_t>::min() && b == -1) return a;
  return a / b;
}

std::int32_t rem32(std::int32_t a, std::int32_t b) {
  if (b == 0) return a;
  if (a == std::numeric_limits<std::int32_t>::min() && b == -1) return 0;
  return a % b;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

bool is_muldiv(Op op) {
  switch (op) {
    case Op::kMul: case Op::kMulh: case Op::kMulhsu: case Op::kMulhu: case Op::kMulw:
      return true;
    default:
      return false;
  }
}

bool is_div(Op op) {
  switch (op) {
    case Op::kDiv: case Op::kDivu: case Op::kRem: case Op::kRemu:
    case Op::kDivw: case Op::kDivuw: case Op::kRemw: case Op::kRemuw:
      return true;
    default:
      return false;
  }
}

}  // namespace

bool propagate_tag(const Instruction& instr, bool src1, bool src2) {
  switch (instr_class(instr.op)) {
    case InstrClass::kAluRR:
      return src1 || src2;
    case InstrClass::kAluRI:
      return src1;
    default:
      return false;
  }
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kHalted: return "halted";
    case RunStatus::kTrapped: return "trapped";
    case RunStatus::kBudgetExceeded: return "budget_exceeded";
  }
  return "unknown";
}

Machine::Machine(const MachineConfig& config)
    : config_(config), mem_(config.mem), os_(config.os, config.seed) {
  st_.master_key = generate_master_key(config_.seed);
  st_.thread_key = derive_thread_key(st_.master_key, 0);
  if (config_.audit) mem_.enable_audit();
}

void Machine::load_image(const Program& program) {
  for (const Segment& seg : program.segments) {
    if (!mem_.contains(seg.base, seg.bytes.size())) {
      throw LoadError("SegmentOutOfBounds: segment at " + hex(seg.base) + " (" +
                      std::to_string(seg.bytes.size()) + " bytes) lies outside DRAM");
    }
  }
  for (std::size_t i = 0; i < program.segments.size(); ++i) {
    for (std::size_t j = i + 1; j < program.segments.size(); ++j) {
      const Segment& a = program.segments[i];
      const Segment& b = program.segments[j];
      if (a.base < b.end() && b.base < a.end()) {
        throw LoadError("SegmentOutOfBounds: segments at " + hex(a.base) + " and " +
                        hex(b.base) + " overlap");
      }
    }
  }
  for (const Segment& seg : program.segments) mem_.write_initial(seg.base, seg.bytes);
  st_.pc = program.entry;
  st_.regs.fill(TaggedWord{});
  st_.regs[2] = {mem_.dram_end() - config_.stack_reserve, false};
  st_.halted = false;
  st_.exit_code = 0;
  oracle_.clear();
}

bool Machine::step() {
  if (st_.halted) return false;
  const FetchResult f = mem_.fetch(st_.pc, st_.thread_key);
  const auto in = decode(f.word);
  if (!in) {
    throw Trap(TrapKind::kIllegalInstruction, st_.pc,
               "cannot decode instruction word " + hex(f.word));
  }
  std::uint64_t next_pc = st_.pc + 4;
  const std::uint64_t cycles = f.cycles + exec(*in, next_pc);
  st_.cycles += cycles;
  ++st_.instret;
  ++st_.histogram[static_cast<std::size_t>(in->op)];
  st_.pc = next_pc;
  if (config_.audit) audit_step();
  return !st_.halted;
}

std::uint64_t Machine::exec_alu(const Instruction& in) {
  const TaggedWord a = st_.reg(in.rs1);
  const bool rr = instr_class(in.op) == InstrClass::kAluRR;
  const TaggedWord b = rr ? st_.reg(in.rs2) : TaggedWord{static_cast<std::uint64_t>(in.imm), false};
  const std::uint64_t x = a.value;
  const std::uint64_t y = b.value;
  const auto sx = static_cast<std::int64_t>(x);
  const auto sy = static_cast<std::int64_t>(y);
  std::uint64_t r = 0;
  switch (in.op) {
    case Op::kAdd: case Op::kAddi: r = x + y; break;
    case Op::kSub: r = x - y; break;
    case Op::kSll: case Op::kSlli: r = x << (y & 63); break;
    case Op::kSrl: case Op::kSrli: r = x >> (y & 63); break;
    case Op::kSra: case Op::kSrai: r = static_cast<std::uint64_t>(sx >> (y & 63)); break;
    case Op::kSlt: case Op::kSlti: r = sx < sy; break;
    case Op::kSltu: case Op::kSltiu: r = x < y; break;
    case Op::kXor: case Op::kXori: r = x ^ y; break;
    case Op::kOr: case Op::kOri: r = x | y; break;
    case Op::kAnd: case Op::kAndi: r = x & y; break;
    case Op::kAddw: case Op::kAddiw: r = sext32(x + y); break;
    case Op::kSubw: r = sext32(x - y); break;
    case Op::kSllw: case Op::kSlliw: r = sext32(x << (y & 31)); break;
    case Op::kSrlw: case Op::kSrliw:
      r = sext32(static_cast<std::uint32_t>(x) >> (y & 31));
      break;
    case Op::kSraw: case Op::kSraiw:
      r = static_cast<std::uint64_t>(static_cast<std::int64_t>(static_cast<std::int32_t>(x) >> (y & 31)));
      break;
    case Op::kMul: r = x * y; break;
    case Op::kMulh:
      r = static_cast<std::uint64_t>((static_cast<i128>(sx) * sy) >> 64);
      break;
    case Op::kMulhsu:
      r = static_cast<std::uint64_t>(
          (static_cast<i128>(sx) * static_cast<i128>(y)) >> 64);
      break;
    case Op::kMulhu:
      r = static_cast<std::uint64_t>((static_cast<u128>(x) * y) >> 64);
      break;
    case Op::kDiv: r = div_signed(sx, sy); break;
    case Op::kDivu: r = y == 0 ? ~0ULL : x / y; break;
    case Op::kRem: r = rem_signed(sx, sy); break;
    case Op::kRemu: r = y == 0 ? x : x % y; break;
    case Op::kMulw: r = sext32(x * y); break;
    case Op::kDivw:
      r = static_cast<std::uint64_t>(std::int64_t{div32(static_cast<std::int32_t>(x), static_cast<std::int32_t>(y))});
      break;
    case Op::kDivuw: {
      const auto ux = static_cast<std::uint32_t>(x);
      const auto uy = static_cast<std::uint32_t>(y);
      r = sext32(uy == 0 ? 0xFFFF'FFFFu : ux / uy);
      break;
    }
    case Op::kRemw:
      r = static_cast<std::uint64_t>(std::int64_t{rem32(static_cast<std::int32_t>(x), static_cast<std::int32_t>(y))});
      break;
    case Op::kRemuw: {
      const auto ux = static_cast<std::uint32_t>(x);
      const auto uy = static_cast<std::uint32_t>(y);
      r = sext32(uy == 0 ? ux : ux % uy);
      break;
    }
    default:
      throw Trap(TrapKind::kIllegalInstruction, st_.pc, "not an ALU operation");
  }
  st_.set_reg(in.rd, {r, propagate_tag(in, a.tag, b.tag)});
  oracle_.set_reg(in.rd, ByteOracle::alu(oracle_.reg(in.rs1), rr ? oracle_.reg(in.rs2) : 0));
  const CycleCosts& c = config_.mem.costs;
  if (is_div(in.op)) return c.div;
  if (is_muldiv(in.op)) return c.mul;
  return c.alu;
}

std::uint64_t Machine::exec(const Instruction& in, std::uint64_t& next_pc) {
  const CycleCosts& c = config_.mem.costs;
  const std::uint64_t pc = st_.pc;
  switch (instr_class(in.op)) {
    case InstrClass::kAluRR:
    case InstrClass::kAluRI:
      return exec_alu(in);

    case InstrClass::kUpper: {
      const std::uint64_t imm = static_cast<std::uint64_t>(in.imm);
      st_.set_reg(in.rd, {in.op == Op::kLui ? imm : pc + imm, propagate_tag(in, false, false)});
      oracle_.set_reg(in.rd, 0);
      return c.alu;
    }

    case InstrClass::kJump: {
      const std::uint64_t target =
          in.op == Op::kJal ? pc + static_cast<std::uint64_t>(in.imm)
                            : (st_.reg(in.rs1).value + static_cast<std::uint64_t>(in.imm)) & ~1ULL;
      st_.set_reg(in.rd, {pc + 4, false});
      oracle_.set_reg(in.rd, 0);
      next_pc = target;
      return c.jump;
    }

    case InstrClass::kBranch: {
      const std::uint64_t x = st_.reg(in.rs1).value;
      const std::uint64_t y = st_.reg(in.rs2).value;
      const auto sx = static_cast<std::int64_t>(x);
      const auto sy = static_cast<std::int64_t>(y);
      bool taken = false;
      switch (in.op) {
        case Op::kBeq: taken = x == y; break;
        case Op::kBne: taken = x != y; break;
        case Op::kBlt: taken = sx < sy; break;
        case Op::kBge: taken = sx >= sy; break;
        case Op::kBltu: taken = x < y; break;
        case Op::kBgeu: taken = x >= y; break;
        default: break;
      }
      if (taken) next_pc = pc + static_cast<std::uint64_t>(in.imm);
      const bool predicted_taken = in.imm < 0;
      return c.branch + (taken != predicted_taken ? c.branch_mispredict : 0);
    }

    case InstrClass::kLoad: {
      const std::uint64_t addr = st_.reg(in.rs1).value + static_cast<std::uint64_t>(in.imm);
      const unsigned width = access_width(in.op);
      const bool is_signed = load_is_signed(in.op);
      const LoadResult r = mem_.load(addr, width, is_signed, st_.thread_key);
      st_.set_reg(in.rd, {r.value, r.tag});
      oracle_.set_reg(in.rd, ByteOracle::load(mem_.taint_bits(addr, width), width, is_signed));
      return r.cycles;
    }

    case InstrClass::kStore: {
      const std::uint64_t addr = st_.reg(in.rs1).value + static_cast<std::uint64_t>(in.imm);
      const unsigned width = access_width(in.op);
      const TaggedWord src = st_.reg(in.rs2);
      return mem_.store(addr, width, src.value, src.tag,
                        ByteOracle::store(oracle_.reg(in.rs2), width), st_.thread_key);
    }

    case InstrClass::kCtag: {
      const std::uint64_t base = st_.reg(in.rs1).value;
      const std::uint64_t len = st_.reg(in.rs2).value;
      switch (in.op) {
        case Op::kCtagSet:
          return c.alu + mem_.tag_set_range(base, len, st_.thread_key);
        case Op::kCtagClr:
          return c.alu + mem_.tag_clear_range(base, len, st_.thread_key);
        default: {
          const LoadResult r = mem_.read_tag(base, st_.thread_key);
          st_.set_reg(in.rd, {r.value, false});
          oracle_.set_reg(in.rd, 0);
          return c.alu + r.cycles;
        }
      }
    }

    case InstrClass::kSystem:
      switch (in.op) {
        case Op::kFence:
          return c.alu;
        case Op::kEbreak:
          throw Trap(TrapKind::kBreakpoint, pc, "ebreak");
        default: {
          const EcallResult r = os_.handle_ecall(st_, mem_);
          oracle_.set_reg(10, 0);
          if (r.halt) {
            st_.halted = true;
            st_.exit_code = r.exit_code;
          }
          if (r.flushed && config_.audit) audit_flush();
          return c.alu + r.cycles;
        }
      }
  }
  throw Trap(TrapKind::kIllegalInstruction, pc, "unhandled instruction class");
}

void Machine::audit_step() {
  ++audit_.steps_checked;
  for (std::uint64_t word : mem_.take_touched_words()) {
    if (mem_.byte_taint(word) != 0 && !mem_.logical_tag(word)) ++audit_.memory_under_tag;
  }
  for (unsigned r = 1; r < 32; ++r) {
    if (oracle_.reg(r) != 0 && !st_.regs[r].tag) ++audit_.register_under_tag;
  }
}

void Machine::audit_flush() {
  ++audit_.flush_checks;
  audit_.ciphertext_violations += mem_.audit_ciphertext_invariant();
}

RunResult Machine::run(std::uint64_t max_instret) {
  RunResult result;
  try {
    while (!st_.halted) {
      if (st_.instret >= max_instret) {
        result.status = RunStatus::kBudgetExceeded;
        result.diagnostic = "InstructionBudgetExceeded: " + std::to_string(max_instret) +
                            " instructions retired without halting";
        break;
      }
      step();
    }
  } catch (const Trap& t) {
    result.status = RunStatus::kTrapped;
    result.diagnostic = t.what();
  }
  if (st_.halted) result.exit_code = st_.exit_code;
  finish();
  return result;
}

void Machine::finish() {
  mem_.flush_and_sync(st_.thread_key);
  if (config_.audit) {
    audit_step();
    audit_flush();
  }
}

std::string compare_architectural_state(const Machine& a, const Machine& b) {
  const MachineState& x = a.state();
  const MachineState& y = b.state();
  if (x.pc != y.pc) return "pc differs: " + hex(x.pc) + " vs " + hex(y.pc);
  for (unsigned r = 0; r < 32; ++r) {
    if (x.regs[r] != y.regs[r]) {
      return "x" + std::to_string(r) + " differs: " + hex(x.regs[r].value) + "/" +
             std::to_string(x.regs[r].tag) + " vs " + hex(y.regs[r].value) + "/" +
             std::to_string(y.regs[r].tag);
    }
  }
  if (x.halted != y.halted || x.exit_code != y.exit_code) return "halt state or exit code differs";
  if (x.instret != y.instret) return "instret differs";
  if (x.current_tid != y.current_tid) return "current thread differs";
  const MemorySystem& ma = a.mem();
  const MemorySystem& mb = b.mem();
  if (ma.word_count() != mb.word_count()) return "DRAM size differs";
  const std::uint64_t base = ma.config().dram_base;
  for (std::uint64_t i = 0; i < ma.word_count(); ++i) {
    const std::uint64_t addr = base + 8 * i;
    if (ma.dram_word(addr) != mb.dram_word(addr) || ma.shadow_tag(addr) != mb.shadow_tag(addr)) {
      return "memory differs at " + hex(addr);
    }
  }
  return {};
}

}  // namespace conch

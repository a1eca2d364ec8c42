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

#include "conch/isa.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace conch {
namespace {

struct OpInfo {
  Op op;
  std::string_view name;
  InstrClass cls;
  Format format;
  std::uint32_t opcode;
  std::uint32_t funct3;
  std::uint32_t funct7;
};

using C = InstrClass;
using F = Format;

// Indexed by Op.
constexpr std::array<OpInfo, kOpCount> kOps = {{
    {Op::kLui, "lui", C::kUpper, F::kU, 0x37, 0, 0},
    {Op::kAuipc, "auipc", C::kUpper, F::kU, 0x17, 0, 0},
    {Op::kJal, "jal", C::kJump, F::kJ, 0x6F, 0, 0},
    {Op::kJalr, "jalr", C::kJump, F::kJalr, 0x67, 0, 0},
    {Op::kBeq, "beq", C::kBranch, F::kBranch, 0x63, 0, 0},
    {Op::kBne, "bne", C::kBranch, F::kBranch, 0x63, 1, 0},
    {Op::kBlt, "blt", C::kBranch, F::kBranch, 0x63, 4, 0},
    {Op::kBge, "bge", C::kBranch, F::kBranch, 0x63, 5, 0},
    {Op::kBltu, "bltu", C::kBranch, F::kBranch, 0x63, 6, 0},
    {Op::kBgeu, "bgeu", C::kBranch, F::kBranch, 0x63, 7, 0},
    {Op::kLb, "lb", C::kLoad, F::kLoad, 0x03, 0, 0},
    {Op::kLh, "lh", C::kLoad, F::kLoad, 0x03, 1, 0},
    {Op::kLw, "lw", C::kLoad, F::kLoad, 0x03, 2, 0},
    {Op::kLd, "ld", C::kLoad, F::kLoad, 0x03, 3, 0},
    {Op::kLbu, "lbu", C::kLoad, F::kLoad, 0x03, 4, 0},
    {Op::kLhu, "lhu", C::kLoad, F::kLoad, 0x03, 5, 0},
    {Op::kLwu, "lwu", C::kLoad, F::kLoad, 0x03, 6, 0},
    {Op::kSb, "sb", C::kStore, F::kStore, 0x23, 0, 0},
    {Op::kSh, "sh", C::kStore, F::kStore, 0x23, 1, 0},
    {Op::kSw, "sw", C::kStore, F::kStore, 0x23, 2, 0},
    {Op::kSd, "sd", C::kStore, F::kStore, 0x23, 3, 0},
    {Op::kAddi, "addi", C::kAluRI, F::kI, 0x13, 0, 0},
    {Op::kSlti, "slti", C::kAluRI, F::kI, 0x13, 2, 0},
    {Op::kSltiu, "sltiu", C::kAluRI, F::kI, 0x13, 3, 0},
    {Op::kXori, "xori", C::kAluRI, F::kI, 0x13, 4, 0},
    {Op::kOri, "ori", C::kAluRI, F::kI, 0x13, 6, 0},
    {Op::kAndi, "andi", C::kAluRI, F::kI, 0x13, 7, 0},
    {Op::kSlli, "slli", C::kAluRI, F::kShift64, 0x13, 1, 0x00},
    {Op::kSrli, "srli", C::kAluRI, F::kShift64, 0x13, 5, 0x00},
    {Op::kSrai, "srai", C::kAluRI, F::kShift64, 0x13, 5, 0x20},
    {Op::kAddiw, "addiw", C::kAluRI, F::kI, 0x1B, 0, 0},
    {Op::kSlliw, "slliw", C::kAluRI, F::kShift32, 0x1B, 1, 0x00},
    {Op::kSrliw, "srliw", C::kAluRI, F::kShift32, 0x1B, 5, 0x00},
    {Op::kSraiw, "sraiw", C::kAluRI, F::kShift32, 0x1B, 5, 0x20},
    {Op::kAdd, "add", C::kAluRR, F::kR, 0x33, 0, 0x00},
    {Op::kSub, "sub", C::kAluRR, F::kR, 0x33, 0, 0x20},
    {Op::kSll, "sll", C::kAluRR, F::kR, 0x33, 1, 0x00},
    {Op::kSlt, "slt", C::kAluRR, F::kR, 0x33, 2, 0x00},
    {Op::kSltu, "sltu", C::kAluRR, F::kR, 0x33, 3, 0x00},
    {Op::kXor, "xor", C::kAluRR, F::kR, 0x33, 4, 0x00},
    {Op::kSrl, "srl", C::kAluRR, F::kR, 0x33, 5, 0x00},
    {Op::kSra, "sra", C::kAluRR, F::kR, 0x33, 5, 0x20},
    {Op::kOr, "or", C::kAluRR, F::kR, 0x33, 6, 0x00},
    {Op::kAnd, "and", C::kAluRR, F::kR, 0x33, 7, 0x00},
    {Op::kAddw, "addw", C::kAluRR, F::kR, 0x3B, 0, 0x00},
    {Op::kSubw, "subw", C::kAluRR, F::kR, 0x3B, 0, 0x20},
    {Op::kSllw, "sllw", C::kAluRR, F::kR, 0x3B, 1, 0x00},
    {Op::kSrlw, "srlw", C::kAluRR, F::kR, 0x3B, 5, 0x00},
    {Op::kSraw, "sraw", C::kAluRR, F::kR, 0x3B, 5, 0x20},
    {Op::kMul, "mul", C::kAluRR, F::kR, 0x33, 0, 0x01},
    {Op::kMulh, "mulh", C::kAluRR, F::kR, 0x33, 1, 0x01},
    {Op::kMulhsu, "mulhsu", C::kAluRR, F::kR, 0x33, 2, 0x01},
    {Op::kMulhu, "mulhu", C::kAluRR, F::kR, 0x33, 3, 0x01},
    {Op::kDiv, "div", C::kAluRR, F::kR, 0x33, 4, 0x01},
    {Op::kDivu, "divu", C::kAluRR, F::kR, 0x33, 5, 0x01},
    {Op::kRem, "rem", C::kAluRR, F::kR, 0x33, 6, 0x01},
    {Op::kRemu, "remu", C::kAluRR, F::kR, 0x33, 7, 0x01},
    {Op::kMulw, "mulw", C::kAluRR, F::kR, 0x3B, 0, 0x01},
    {Op::kDivw, "divw", C::kAluRR, F::kR, 0x3B, 4, 0x01},
    {Op::kDivuw, "divuw", C::kAluRR, F::kR, 0x3B, 5, 0x01},
    {Op::kRemw, "remw", C::kAluRR, F::kR, 0x3B, 6, 0x01},
    {Op::kRemuw, "remuw", C::kAluRR, F::kR, 0x3B, 7, 0x01},
    {Op::kFence, "fence", C::kSystem, F::kNone, 0x0F, 0, 0},
    {Op::kEcall, "ecall", C::kSystem, F::kNone, 0x73, 0, 0},
    {Op::kEbreak, "ebreak", C::kSystem, F::kNone, 0x73, 0, 0},
    {Op::kCtagSet, "ctag.set", C::kCtag, F::kR, kCustom0Opcode, 0, 0},
    {Op::kCtagClr, "ctag.clr", C::kCtag, F::kR, kCustom0Opcode, 1, 0},
    {Op::kCtagRdt, "ctag.rdt", C::kCtag, F::kR, kCustom0Opcode, 2, 0},
}};

constexpr bool table_is_indexed() {
  for (std::size_t i = 0; i < kOps.size(); ++i) {
    if (static_cast<std::size_t>(kOps[i].op) != i) return false;
  }
  return true;
}
static_assert(table_is_indexed());

constexpr std::uint32_t kFenceCanonical = 0x0FF0000F;
constexpr std::uint32_t kEcallWord = 0x00000073;
constexpr std::uint32_t kEbreakWord = 0x00100073;

const OpInfo& info(Op op) { return kOps[static_cast<std::size_t>(op)]; }

std::uint32_t mask_for(const OpInfo& i) {
  switch (i.format) {
    case F::kR:
    case F::kShift32:
      return 0xFE00707F;
    case F::kShift64:
      return 0xFC00707F;
    case F::kI:
    case F::kLoad:
    case F::kStore:
    case F::kBranch:
    case F::kJalr:
      return 0x0000707F;
    case F::kU:
    case F::kJ:
      return 0x0000007F;
    case F::kNone:
      return i.op == Op::kFence ? 0x0000707F : 0xFFFFFFFF;
  }
  return 0;
}

std::uint32_t match_for(const OpInfo& i) {
  if (i.op == Op::kEcall) return kEcallWord;
  if (i.op == Op::kEbreak) return kEbreakWord;
  return i.opcode | (i.funct3 << 12) | (i.funct7 << 25);
}

std::int64_t sext(std::uint64_t v, unsigned bits) {
  const std::uint64_t m = 1ULL << (bits - 1);
  v &= (bits == 64) ? ~0ULL : ((1ULL << bits) - 1);
  return static_cast<std::int64_t>((v ^ m) - m);
}

constexpr std::array<std::string_view, 32> kAbiNames = {
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0",
    "a1",   "a2", "a3", "a4", "a5", "a6", "a7", "s2", "s3", "s4", "s5",
    "s6",   "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6"};

}  // namespace

std::string_view mnemonic(Op op) { return info(op).name; }

std::optional<Op> op_from_mnemonic(std::string_view name) {
  for (const auto& i : kOps) {
    if (i.name == name) return i.op;
  }
  return std::nullopt;
}

InstrClass instr_class(Op op) { return info(op).cls; }
Format op_format(Op op) { return info(op).format; }

unsigned access_width(Op op) {
  switch (op) {
    case Op::kLb: case Op::kLbu: case Op::kSb: return 1;
    case Op::kLh: case Op::kLhu: case Op::kSh: return 2;
    case Op::kLw: case Op::kLwu: case Op::kSw: return 4;
    case Op::kLd: case Op::kSd: return 8;
    default: return 0;
  }
}

bool load_is_signed(Op op) {
  return op == Op::kLb || op == Op::kLh || op == Op::kLw || op == Op::kLd;
}

std::optional<Instruction> decode(std::uint32_t word) {
  for (const auto& i : kOps) {
    if ((word & mask_for(i)) != match_for(i)) continue;
    Instruction in;
    in.op = i.op;
    const auto rd = static_cast<std::uint8_t>((word >> 7) & 0x1F);
    const auto rs1 = static_cast<std::uint8_t>((word >> 15) & 0x1F);
    const auto rs2 = static_cast<std::uint8_t>((word >> 20) & 0x1F);
    switch (i.format) {
      case F::kR:
        in.rd = rd; in.rs1 = rs1; in.rs2 = rs2;
        break;
      case F::kI:
      case F::kLoad:
      case F::kJalr:
        in.rd = rd; in.rs1 = rs1;
        in.imm = sext(word >> 20, 12);
        break;
      case F::kShift64:
        in.rd = rd; in.rs1 = rs1;
        in.imm = (word >> 20) & 0x3F;
        break;
      case F::kShift32:
        in.rd = rd; in.rs1 = rs1;
        in.imm = (word >> 20) & 0x1F;
        break;
      case F::kStore:
        in.rs1 = rs1; in.rs2 = rs2;
        in.imm = sext(((word >> 25) << 5) | ((word >> 7) & 0x1F), 12);
        break;
      case F::kBranch: {
        in.rs1 = rs1; in.rs2 = rs2;
        const std::uint64_t imm = (((word >> 31) & 1) << 12) |
                                  (((word >> 7) & 1) << 11) |
                                  (((word >> 25) & 0x3F) << 5) |
                                  (((word >> 8) & 0xF) << 1);
        in.imm = sext(imm, 13);
        break;
      }
      case F::kU:
        in.rd = rd;
        in.imm = sext(word & 0xFFFFF000, 32);
        break;
      case F::kJ: {
        in.rd = rd;
        const std::uint64_t imm = (((word >> 31) & 1) << 20) |
                                  (((word >> 12) & 0xFF) << 12) |
                                  (((word >> 20) & 1) << 11) |
                                  (((word >> 21) & 0x3FF) << 1);
        in.imm = sext(imm, 21);
        break;
      }
      case F::kNone:
        break;
    }
    return in;
  }
  return std::nullopt;
}

std::uint32_t encode(const Instruction& in) {
  const OpInfo& i = info(in.op);
  const std::uint32_t rd = in.rd & 0x1Fu;
  const std::uint32_t rs1 = in.rs1 & 0x1Fu;
  const std::uint32_t rs2 = in.rs2 & 0x1Fu;
  const auto imm = static_cast<std::uint32_t>(in.imm);
  const std::uint32_t base = i.opcode | (i.funct3 << 12);
  switch (i.format) {
    case F::kR:
      return base | (rd << 7) | (rs1 << 15) | (rs2 << 20) | (i.funct7 << 25);
    case F::kI:
    case F::kLoad:
    case F::kJalr:
      return base | (rd << 7) | (rs1 << 15) | ((imm & 0xFFF) << 20);
    case F::kShift64:
      return base | (rd << 7) | (rs1 << 15) | ((imm & 0x3F) << 20) |
             (i.funct7 << 25);
    case F::kShift32:
      return base | (rd << 7) | (rs1 << 15) | ((imm & 0x1F) << 20) |
             (i.funct7 << 25);
    case F::kStore:
      return base | ((imm & 0x1F) << 7) | (rs1 << 15) | (rs2 << 20) |
             (((imm >> 5) & 0x7F) << 25);
    case F::kBranch:
      return base | (((imm >> 11) & 1) << 7) | (((imm >> 1) & 0xF) << 8) |
             (rs1 << 15) | (rs2 << 20) | (((imm >> 5) & 0x3F) << 25) |
             (((imm >> 12) & 1) << 31);
    case F::kU:
      return i.opcode | (rd << 7) | (imm & 0xFFFFF000);
    case F::kJ:
      return i.opcode | (rd << 7) | (((imm >> 12) & 0xFF) << 12) |
             (((imm >> 11) & 1) << 20) | (((imm >> 1) & 0x3FF) << 21) |
             (((imm >> 20) & 1) << 31);
    case F::kNone:
      if (in.op == Op::kFence) return kFenceCanonical;
      return match_for(i);
  }
  return 0;
}

std::uint32_t encode_ctag(CtagKind kind, unsigned rd, unsigned rs1,
                          unsigned rs2) {
  static constexpr std::array<Op, 3> kByKind = {Op::kCtagSet, Op::kCtagClr,
                                                Op::kCtagRdt};
  Instruction in;
  in.op = kByKind[static_cast<std::size_t>(kind)];
  in.rd = static_cast<std::uint8_t>(rd);
  in.rs1 = static_cast<std::uint8_t>(rs1);
  in.rs2 = static_cast<std::uint8_t>(rs2);
  return encode(in);
}

std::string disassemble(const Instruction& in) {
  const OpInfo& i = info(in.op);
  char buf[96];
  const auto name = std::string(i.name);
  const char* n = name.c_str();
  const auto imm = static_cast<long long>(in.imm);
  switch (i.format) {
    case F::kR:
      std::snprintf(buf, sizeof buf, "%s x%u, x%u, x%u", n, in.rd, in.rs1,
                    in.rs2);
      break;
    case F::kI:
    case F::kShift64:
    case F::kShift32:
      std::snprintf(buf, sizeof buf, "%s x%u, x%u, %lld", n, in.rd, in.rs1,
                    imm);
      break;
    case F::kLoad:
    case F::kJalr:
      std::snprintf(buf, sizeof buf, "%s x%u, %lld(x%u)", n, in.rd, imm,
                    in.rs1);
      break;
    case F::kStore:
      std::snprintf(buf, sizeof buf, "%s x%u, %lld(x%u)", n, in.rs2, imm,
                    in.rs1);
      break;
    case F::kBranch:
      std::snprintf(buf, sizeof buf, "%s x%u, x%u, %lld", n, in.rs1, in.rs2,
                    imm);
      break;
    case F::kU:
      std::snprintf(buf, sizeof buf, "%s x%u, 0x%llx", n, in.rd,
                    static_cast<unsigned long long>(
                        (static_cast<std::uint64_t>(in.imm) >> 12) & 0xFFFFF));
      break;
    case F::kJ:
      std::snprintf(buf, sizeof buf, "%s x%u, %lld", n, in.rd, imm);
      break;
    case F::kNone:
      std::snprintf(buf, sizeof buf, "%s", n);
      break;
  }
  return buf;
}

std::optional<unsigned> parse_register(std::string_view name) {
  if (name.size() >= 2 && name[0] == 'x') {
    unsigned idx = 0;
    const auto* first = name.data() + 1;
    const auto* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, idx);
    if (ec == std::errc{} && ptr == last && idx < 32) return idx;
    return std::nullopt;
  }
  if (name == "fp") return 8u;
  for (unsigned r = 0; r < kAbiNames.size(); ++r) {
    if (kAbiNames[r] == name) return r;
  }
  return std::nullopt;
}

}  // namespace conch

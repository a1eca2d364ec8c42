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

// Instruction formats of the supported subset: RV64I, the M extension,
// ecall/ebreak/fence, and the CTAG group on the custom-0 major opcode.

#ifndef CONCH_ISA_HPP_
#define CONCH_ISA_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace conch {

enum class Op : std::uint8_t {
  // upper / jumps
  kLui, kAuipc, kJal, kJalr,
  // branches
  kBeq, kBne, kBlt, kBge, kBltu, kBgeu,
  // loads
  kLb, kLh, kLw, kLd, kLbu, kLhu, kLwu,
  // stores
  kSb, kSh, kSw, kSd,
  // register-immediate
  kAddi, kSlti, kSltiu, kXori, kOri, kAndi, kSlli, kSrli, kSrai,
  kAddiw, kSlliw, kSrliw, kSraiw,
  // register-register
  kAdd, kSub, kSll, kSlt, kSltu, kXor, kSrl, kSra, kOr, kAnd,
  kAddw, kSubw, kSllw, kSrlw, kSraw,
  // M extension
  kMul, kMulh, kMulhsu, kMulhu, kDiv, kDivu, kRem, kRemu,
  kMulw, kDivw, kDivuw, kRemw, kRemuw,
  // system
  kFence, kEcall, kEbreak,
  // tag management (custom-0)
  kCtagSet, kCtagClr, kCtagRdt,
  kCount
};

inline constexpr std::size_t kOpCount = static_cast<std::size_t>(Op::kCount);

// Exactly one tag-propagation rule applies per class.
enum class InstrClass {
  kAluRR, kAluRI, kLoad, kStore, kBranch, kJump, kUpper, kSystem, kCtag
};

// Operand layout, used by the encoder, the assembler, and the disassembler.
enum class Format {
  kR,         // rd, rs1, rs2
  kI,         // rd, rs1, imm12
  kShift64,   // rd, rs1, shamt6
  kShift32,   // rd, rs1, shamt5
  kLoad,      // rd, imm(rs1)
  kStore,     // rs2, imm(rs1)
  kBranch,    // rs1, rs2, offset13
  kU,         // rd, imm20
  kJ,         // rd, offset21
  kJalr,      // rd, imm(rs1)
  kNone,      // no operands
};

enum class CtagKind : std::uint8_t { kSet = 0, kClr = 1, kRdt = 2 };

inline constexpr std::uint32_t kCustom0Opcode = 0b0001011;

struct Instruction {
  Op op = Op::kAddi;
  std::uint8_t rd = 0;
  std::uint8_t rs1 = 0;
  std::uint8_t rs2 = 0;
  // Sign-extended immediate, or the shift amount, or the upper immediate
  // already shifted into bits 31..12 for lui/auipc.
  std::int64_t imm = 0;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

std::string_view mnemonic(Op op);
std::optional<Op> op_from_mnemonic(std::string_view name);
InstrClass instr_class(Op op);
Format op_format(Op op);

// Width in bytes of a load/store op; 0 for everything else.
unsigned access_width(Op op);
bool load_is_signed(Op op);

// Total over the supported subset; nullopt means IllegalInstruction.
std::optional<Instruction> decode(std::uint32_t word);

// Packs the fields; operands must already be range-checked by the caller.
std::uint32_t encode(const Instruction& instr);

std::uint32_t encode_ctag(CtagKind kind, unsigned rd, unsigned rs1,
                          unsigned rs2);

// Assembler syntax with x-register names. Branch and jal targets are printed
// as pc-relative byte offsets, which the assembler accepts back.
std::string disassemble(const Instruction& instr);

// Register name helpers: "x0".."x31" and the standard ABI names.
std::optional<unsigned> parse_register(std::string_view name);

}  // namespace conch

#endif  // CONCH_ISA_HPP_

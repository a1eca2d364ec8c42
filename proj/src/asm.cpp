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

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "conch/isa.hpp"

namespace conch {

std::string_view to_string(AsmErrorKind kind) {
  switch (kind) {
    case AsmErrorKind::kUnknownMnemonic: return "UnknownMnemonic";
    case AsmErrorKind::kUndefinedLabel: return "UndefinedLabel";
    case AsmErrorKind::kDuplicateLabel: return "DuplicateLabel";
    case AsmErrorKind::kImmediateOutOfRange: return "ImmediateOutOfRange";
    case AsmErrorKind::kMisalignedTarget: return "MisalignedTarget";
    case AsmErrorKind::kSyntax: return "Syntax";
    case AsmErrorKind::kOverlappingSegments: return "OverlappingSegments";
  }
  return "Unknown";
}

AsmError::AsmError(AsmErrorKind kind, int line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " +
                         std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      line_(line) {}

SourceUnit SourceUnit::from_text(std::string_view text, std::string origin) {
  SourceUnit unit;
  unit.origin = std::move(origin);
  int number = 1;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    unit.lines.push_back({number++, std::move(line)});
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return unit;
}

SourceUnit SourceUnit::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), path);
}

namespace {

struct Statement {
  int line = 0;
  std::vector<std::string> labels;
  std::string op;  // lower-cased; directives keep their leading '.'
  std::vector<std::string> args;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
         c == '$';
}

bool is_ident_char(char c) {
  return is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Splits on commas that are not inside a string literal.
std::vector<std::string> split_args(std::string_view s, int line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_str) {
      cur += c;
      if (c == '\\' && i + 1 < s.size()) {
        cur += s[++i];
      } else if (c == '"') {
        in_str = false;
      }
      continue;
    }
    if (c == '"') {
      in_str = true;
      cur += c;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (in_str) throw AsmError(AsmErrorKind::kSyntax, line, "unterminated string");
  const auto last = trim(cur);
  if (!last.empty() || !out.empty()) out.emplace_back(last);
  return out;
}

std::optional<Statement> parse_line(const SourceLine& src) {
  // Strip the comment, respecting string literals.
  std::string_view text = src.text;
  bool in_str = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (in_str) {
      if (text[i] == '\\') ++i;
      else if (text[i] == '"') in_str = false;
    } else if (text[i] == '"') {
      in_str = true;
    } else if (text[i] == '#') {
      text = text.substr(0, i);
      break;
    }
  }
  text = trim(text);
  if (text.empty()) return std::nullopt;

  Statement st;
  st.line = src.number;
  for (;;) {
    std::size_t i = 0;
    if (text.empty() || !is_ident_start(text[0])) break;
    while (i < text.size() && is_ident_char(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j;
    if (j < text.size() && text[j] == ':') {
      st.labels.emplace_back(text.substr(0, i));
      text = trim(text.substr(j + 1));
    } else {
      break;
    }
  }
  if (!text.empty()) {
    std::size_t i = 0;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    st.op = lower(text.substr(0, i));
    st.args = split_args(trim(text.substr(i)), st.line);
  }
  return st;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.size() >= 3 && s.front() == '\'' && s.back() == '\'') {
    if (s.size() == 3) return static_cast<unsigned char>(s[1]);
    if (s.size() == 4 && s[1] == '\\') {
      switch (s[2]) {
        case 'n': return '\n';
        case 't': return '\t';
        case '0': return 0;
        case '\\': return '\\';
        case '\'': return '\'';
        default: return std::nullopt;
      }
    }
    return std::nullopt;
  }
  bool neg = false;
  if (s.front() == '-' || s.front() == '+') {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  } else if (s.size() > 2 && s[0] == '0' && (s[1] == 'b' || s[1] == 'B')) {
    base = 2;
    s.remove_prefix(2);
  }
  std::string digits;
  for (char c : s) {
    if (c != '_') digits += c;
  }
  std::uint64_t mag = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(),
                                   mag, base);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
    return std::nullopt;
  }
  if (neg) {
    if (mag > (1ULL << 63)) return std::nullopt;
    return static_cast<std::int64_t>(0 - mag);
  }
  return static_cast<std::int64_t>(mag);
}

bool fits_signed(std::int64_t v, unsigned bits) {
  const std::int64_t lo = -(std::int64_t{1} << (bits - 1));
  const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
  return v >= lo && v <= hi;
}

std::int64_t sext(std::uint64_t v, unsigned bits) {
  if (bits >= 64) return static_cast<std::int64_t>(v);
  const std::uint64_t m = 1ULL << (bits - 1);
  v &= (1ULL << bits) - 1;
  return static_cast<std::int64_t>((v ^ m) - m);
}

struct Section {
  std::uint64_t lc;
  SegmentKind kind;
};

class Assembler {
 public:
  explicit Assembler(const SourceUnit& src) {
    for (const auto& line : src.lines) {
      if (auto st = parse_line(line)) statements_.push_back(std::move(*st));
    }
  }

  Program run() {
    pass(false);
    pass(true);
    Program p;
    p.symbols = symbols_;
    p.segments = std::move(segments_);
    std::erase_if(p.segments, [](const Segment& s) { return s.bytes.empty(); });
    std::stable_sort(p.segments.begin(), p.segments.end(),
                     [](const Segment& a, const Segment& b) { return a.base < b.base; });
    for (std::size_t i = 1; i < p.segments.size(); ++i) {
      if (p.segments[i].base < p.segments[i - 1].end()) {
        throw AsmError(AsmErrorKind::kOverlappingSegments, 0,
                       "segments overlap at address " + hex(p.segments[i].base));
      }
    }
    if (auto it = symbols_.find("_start"); it != symbols_.end()) {
      p.entry = it->second;
    } else {
      p.entry = kDefaultTextBase;
      for (const auto& s : p.segments) {
        if (s.kind == SegmentKind::kText) {
          p.entry = s.base;
          break;
        }
      }
    }
    if (p.entry % 4 != 0) {
      throw AsmError(AsmErrorKind::kMisalignedTarget, 0, "entry point not 4-byte aligned");
    }
    return p;
  }

 private:
  static std::string hex(std::uint64_t v) {
    std::ostringstream ss;
    ss << "0x" << std::hex << v;
    return ss.str();
  }

  void pass(bool final) {
    final_ = final;
    text_ = {kDefaultTextBase, SegmentKind::kText};
    data_ = {kDefaultDataBase, SegmentKind::kData};
    cur_ = &text_;
    segments_.clear();
    for (const auto& st : statements_) {
      line_ = st.line;
      for (const auto& label : st.labels) {
        if (!final) {
          if (!symbols_.emplace(label, cur_->lc).second) {
            throw AsmError(AsmErrorKind::kDuplicateLabel, line_,
                           "label '" + label + "' already defined");
          }
        }
      }
      if (st.op.empty()) continue;
      if (st.op.front() == '.') {
        directive(st);
      } else {
        const auto seq = lower_instruction(st, cur_->lc);
        for (const auto& in : seq) {
          const std::uint32_t w = encode(in);
          emit({static_cast<std::uint8_t>(w), static_cast<std::uint8_t>(w >> 8),
                static_cast<std::uint8_t>(w >> 16), static_cast<std::uint8_t>(w >> 24)});
        }
      }
    }
  }

  [[noreturn]] void fail(AsmErrorKind kind, const std::string& msg) const {
    throw AsmError(kind, line_, msg);
  }

  void emit(std::initializer_list<std::uint8_t> bytes) {
    emit(std::vector<std::uint8_t>(bytes));
  }

  void emit(const std::vector<std::uint8_t>& bytes) {
    if (final_) {
      if (segments_.empty() || segments_.back().kind != cur_->kind ||
          segments_.back().end() != cur_->lc) {
        auto it = std::find_if(segments_.begin(), segments_.end(), [&](const Segment& s) {
          return s.kind == cur_->kind && s.end() == cur_->lc;
        });
        if (it == segments_.end()) {
          segments_.push_back({cur_->lc, {}, cur_->kind});
          it = std::prev(segments_.end());
        }
        it->bytes.insert(it->bytes.end(), bytes.begin(), bytes.end());
      } else {
        auto& seg = segments_.back();
        seg.bytes.insert(seg.bytes.end(), bytes.begin(), bytes.end());
      }
    }
    cur_->lc += bytes.size();
  }

  void expect_args(const Statement& st, std::size_t n) const {
    if (st.args.size() != n) {
      fail(AsmErrorKind::kSyntax, "'" + st.op + "' expects " + std::to_string(n) +
                                      " operand(s), got " + std::to_string(st.args.size()));
    }
  }

  std::int64_t imm(std::string_view s) const {
    auto v = parse_int(s);
    if (!v) fail(AsmErrorKind::kSyntax, "bad integer '" + std::string(s) + "'");
    return *v;
  }

  // Integer literal or label address.
  std::int64_t value(std::string_view s) const {
    if (auto v = parse_int(s)) return *v;
    return static_cast<std::int64_t>(label(s));
  }

  std::uint64_t label(std::string_view name) const {
    const std::string key(trim(name));
    if (key.empty() || !is_ident_start(key[0])) {
      fail(AsmErrorKind::kSyntax, "expected label, got '" + key + "'");
    }
    auto it = symbols_.find(key);
    if (it == symbols_.end()) {
      if (!final_) return 0;
      fail(AsmErrorKind::kUndefinedLabel, "undefined label '" + key + "'");
    }
    return it->second;
  }

  std::uint8_t reg(std::string_view s) const {
    auto r = parse_register(lower(trim(s)));
    if (!r) fail(AsmErrorKind::kSyntax, "bad register '" + std::string(s) + "'");
    return static_cast<std::uint8_t>(*r);
  }

  // "imm(reg)" or "(reg)".
  std::pair<std::int64_t, std::uint8_t> mem_operand(std::string_view s) const {
    s = trim(s);
    const auto open = s.find('(');
    if (open == std::string_view::npos || s.back() != ')') {
      fail(AsmErrorKind::kSyntax, "expected offset(reg), got '" + std::string(s) + "'");
    }
    const auto off_text = trim(s.substr(0, open));
    const std::int64_t off = off_text.empty() ? 0 : imm(off_text);
    const auto r = reg(s.substr(open + 1, s.size() - open - 2));
    return {off, r};
  }

  void check_imm(std::int64_t v, unsigned bits, const char* what) const {
    if (!fits_signed(v, bits)) {
      fail(AsmErrorKind::kImmediateOutOfRange,
           std::string(what) + " " + std::to_string(v) + " does not fit in " +
               std::to_string(bits) + " signed bits");
    }
  }

  // pc-relative offset for a branch/jump target operand.
  std::int64_t target_offset(std::string_view s, std::uint64_t pc, unsigned bits) const {
    std::int64_t off = 0;
    if (auto v = parse_int(s)) {
      off = *v;
    } else {
      const std::uint64_t addr = label(s);
      if (!final_) return 0;
      off = static_cast<std::int64_t>(addr - pc);
    }
    if (off % 4 != 0) {
      fail(AsmErrorKind::kMisalignedTarget,
           "target offset " + std::to_string(off) + " is not 4-byte aligned");
    }
    check_imm(off, bits, "branch offset");
    return off;
  }

  static Instruction make(Op op, unsigned rd, unsigned rs1, unsigned rs2, std::int64_t imm) {
    Instruction in;
    in.op = op;
    in.rd = static_cast<std::uint8_t>(rd);
    in.rs1 = static_cast<std::uint8_t>(rs1);
    in.rs2 = static_cast<std::uint8_t>(rs2);
    in.imm = imm;
    return in;
  }

  // Materializes a 64-bit constant: addi, lui(+addiw), or a recursive
  // shift/add sequence for values outside the signed 32-bit range.
  static void li_sequence(std::int64_t v, unsigned rd, std::vector<Instruction>& out) {
    if (fits_signed(v, 32)) {
      const std::int64_t lo = sext(static_cast<std::uint64_t>(v), 12);
      const std::int64_t hi = ((v + 0x800) >> 12) & 0xFFFFF;
      if (hi != 0) {
        out.push_back(make(Op::kLui, rd, 0, 0, sext(static_cast<std::uint64_t>(hi) << 12, 32)));
        if (lo != 0) out.push_back(make(Op::kAddiw, rd, rd, 0, lo));
      } else {
        out.push_back(make(Op::kAddi, rd, 0, 0, lo));
      }
      return;
    }
    const std::int64_t lo = sext(static_cast<std::uint64_t>(v), 12);
    auto hi52 = static_cast<std::uint64_t>((static_cast<std::uint64_t>(v) + 0x800) >> 12);
    const unsigned shift = 12 + static_cast<unsigned>(std::countr_zero(hi52));
    const std::int64_t upper = sext(hi52 >> (shift - 12), 64 - shift);
    li_sequence(upper, rd, out);
    out.push_back(make(Op::kSlli, rd, rd, 0, shift));
    if (lo != 0) out.push_back(make(Op::kAddi, rd, rd, 0, lo));
  }

  std::vector<Instruction> lower_instruction(const Statement& st, std::uint64_t pc) const {
    const std::string& m = st.op;
    const auto& a = st.args;
    std::vector<Instruction> out;

    // Pseudo-instructions first.
    if (m == "nop") {
      expect_args(st, 0);
      out.push_back(make(Op::kAddi, 0, 0, 0, 0));
    } else if (m == "li") {
      expect_args(st, 2);
      li_sequence(imm(a[1]), reg(a[0]), out);
    } else if (m == "la") {
      expect_args(st, 2);
      const unsigned rd = reg(a[0]);
      const std::int64_t off = static_cast<std::int64_t>(label(a[1]) - pc);
      const std::int64_t hi = final_ ? (off + 0x800) >> 12 : 0;
      const std::int64_t lo = final_ ? off - (hi << 12) : 0;
      check_imm(hi, 20, "pc-relative offset");
      out.push_back(make(Op::kAuipc, rd, 0, 0, sext(static_cast<std::uint64_t>(hi) << 12, 32)));
      out.push_back(make(Op::kAddi, rd, rd, 0, lo));
    } else if (m == "mv" || m == "not" || m == "neg" || m == "negw" || m == "sext.w" ||
               m == "seqz" || m == "snez" || m == "sltz" || m == "sgtz") {
      expect_args(st, 2);
      const unsigned rd = reg(a[0]);
      const unsigned rs = reg(a[1]);
      if (m == "mv") out.push_back(make(Op::kAddi, rd, rs, 0, 0));
      if (m == "not") out.push_back(make(Op::kXori, rd, rs, 0, -1));
      if (m == "neg") out.push_back(make(Op::kSub, rd, 0, rs, 0));
      if (m == "negw") out.push_back(make(Op::kSubw, rd, 0, rs, 0));
      if (m == "sext.w") out.push_back(make(Op::kAddiw, rd, rs, 0, 0));
      if (m == "seqz") out.push_back(make(Op::kSltiu, rd, rs, 0, 1));
      if (m == "snez") out.push_back(make(Op::kSltu, rd, 0, rs, 0));
      if (m == "sltz") out.push_back(make(Op::kSlt, rd, rs, 0, 0));
      if (m == "sgtz") out.push_back(make(Op::kSlt, rd, 0, rs, 0));
    } else if (m == "j" || m == "tail") {
      expect_args(st, 1);
      out.push_back(make(Op::kJal, 0, 0, 0, target_offset(a[0], pc, 21)));
    } else if (m == "call") {
      expect_args(st, 1);
      out.push_back(make(Op::kJal, 1, 0, 0, target_offset(a[0], pc, 21)));
    } else if (m == "jr") {
      expect_args(st, 1);
      out.push_back(make(Op::kJalr, 0, reg(a[0]), 0, 0));
    } else if (m == "ret") {
      expect_args(st, 0);
      out.push_back(make(Op::kJalr, 0, 1, 0, 0));
    } else if (m == "beqz" || m == "bnez" || m == "blez" || m == "bgez" ||
               m == "bltz" || m == "bgtz") {
      expect_args(st, 2);
      const unsigned rs = reg(a[0]);
      const std::int64_t off = target_offset(a[1], pc, 13);
      if (m == "beqz") out.push_back(make(Op::kBeq, 0, rs, 0, off));
      if (m == "bnez") out.push_back(make(Op::kBne, 0, rs, 0, off));
      if (m == "blez") out.push_back(make(Op::kBge, 0, 0, rs, off));
      if (m == "bgez") out.push_back(make(Op::kBge, 0, rs, 0, off));
      if (m == "bltz") out.push_back(make(Op::kBlt, 0, rs, 0, off));
      if (m == "bgtz") out.push_back(make(Op::kBlt, 0, 0, rs, off));
    } else if (m == "bgt" || m == "ble" || m == "bgtu" || m == "bleu") {
      expect_args(st, 3);
      const unsigned rs = reg(a[0]);
      const unsigned rt = reg(a[1]);
      const std::int64_t off = target_offset(a[2], pc, 13);
      if (m == "bgt") out.push_back(make(Op::kBlt, 0, rt, rs, off));
      if (m == "ble") out.push_back(make(Op::kBge, 0, rt, rs, off));
      if (m == "bgtu") out.push_back(make(Op::kBltu, 0, rt, rs, off));
      if (m == "bleu") out.push_back(make(Op::kBgeu, 0, rt, rs, off));
    } else {
      out.push_back(lower_base(st, pc));
    }
    return out;
  }

  Instruction lower_base(const Statement& st, std::uint64_t pc) const {
    const auto op = op_from_mnemonic(st.op);
    if (!op) fail(AsmErrorKind::kUnknownMnemonic, "unknown mnemonic '" + st.op + "'");
    const auto& a = st.args;
    switch (op_format(*op)) {
      case Format::kR:
        if (instr_class(*op) == InstrClass::kCtag && a.size() == 2) {
          // Two-operand CTAG forms: set/clr take (base, len) with rd=x0,
          // rdt takes (rd, addr).
          if (*op == Op::kCtagRdt) return make(*op, reg(a[0]), reg(a[1]), 0, 0);
          return make(*op, 0, reg(a[0]), reg(a[1]), 0);
        }
        expect_args(st, 3);
        return make(*op, reg(a[0]), reg(a[1]), reg(a[2]), 0);
      case Format::kI: {
        expect_args(st, 3);
        const std::int64_t v = imm(a[2]);
        check_imm(v, 12, "immediate");
        return make(*op, reg(a[0]), reg(a[1]), 0, v);
      }
      case Format::kShift64:
      case Format::kShift32: {
        expect_args(st, 3);
        const std::int64_t v = imm(a[2]);
        const std::int64_t limit = op_format(*op) == Format::kShift64 ? 63 : 31;
        if (v < 0 || v > limit) {
          fail(AsmErrorKind::kImmediateOutOfRange,
               "shift amount " + std::to_string(v) + " out of range");
        }
        return make(*op, reg(a[0]), reg(a[1]), 0, v);
      }
      case Format::kLoad: {
        expect_args(st, 2);
        const auto [off, base] = mem_operand(a[1]);
        check_imm(off, 12, "offset");
        return make(*op, reg(a[0]), base, 0, off);
      }
      case Format::kStore: {
        expect_args(st, 2);
        const auto [off, base] = mem_operand(a[1]);
        check_imm(off, 12, "offset");
        return make(*op, 0, base, reg(a[0]), off);
      }
      case Format::kBranch:
        expect_args(st, 3);
        return make(*op, 0, reg(a[0]), reg(a[1]), target_offset(a[2], pc, 13));
      case Format::kU: {
        expect_args(st, 2);
        const std::int64_t v = imm(a[1]);
        if (v < -0x80000 || v > 0xFFFFF) {
          fail(AsmErrorKind::kImmediateOutOfRange,
               "upper immediate " + std::to_string(v) + " out of range");
        }
        return make(*op, reg(a[0]), 0, 0, sext(static_cast<std::uint64_t>(v & 0xFFFFF) << 12, 32));
      }
      case Format::kJ:
        if (a.size() == 1) return make(*op, 1, 0, 0, target_offset(a[0], pc, 21));
        expect_args(st, 2);
        return make(*op, reg(a[0]), 0, 0, target_offset(a[1], pc, 21));
      case Format::kJalr:
        if (a.size() == 1) return make(*op, 1, reg(a[0]), 0, 0);
        if (a.size() == 3) {
          const std::int64_t v = imm(a[2]);
          check_imm(v, 12, "offset");
          return make(*op, reg(a[0]), reg(a[1]), 0, v);
        }
        expect_args(st, 2);
        {
          const auto [off, base] = mem_operand(a[1]);
          check_imm(off, 12, "offset");
          return make(*op, reg(a[0]), base, 0, off);
        }
      case Format::kNone:
        if (*op == Op::kFence && (a.empty() || a.size() == 2)) return make(*op, 0, 0, 0, 0);
        expect_args(st, 0);
        return make(*op, 0, 0, 0, 0);
    }
    fail(AsmErrorKind::kUnknownMnemonic, st.op);
  }

  std::vector<std::uint8_t> parse_string(std::string_view s) const {
    s = trim(s);
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') {
      fail(AsmErrorKind::kSyntax, "expected string literal");
    }
    s = s.substr(1, s.size() - 2);
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      if (c != '\\') {
        out.push_back(static_cast<std::uint8_t>(c));
        continue;
      }
      if (++i >= s.size()) fail(AsmErrorKind::kSyntax, "dangling escape");
      switch (s[i]) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '0': out.push_back(0); break;
        case '\\': out.push_back('\\'); break;
        case '"': out.push_back('"'); break;
        case 'x': {
          if (i + 1 >= s.size()) fail(AsmErrorKind::kSyntax, "bad \\x escape");
          unsigned v = 0;
          auto [ptr, ec] = std::from_chars(s.data() + i + 1, s.data() + std::min(s.size(), i + 3), v, 16);
          if (ec != std::errc{}) fail(AsmErrorKind::kSyntax, "bad \\x escape");
          i = static_cast<std::size_t>(ptr - s.data()) - 1;
          out.push_back(static_cast<std::uint8_t>(v));
          break;
        }
        default: fail(AsmErrorKind::kSyntax, "unknown escape");
      }
    }
    return out;
  }

  void directive(const Statement& st) {
    const std::string& d = st.op;
    const auto& a = st.args;
    if (d == ".text") {
      cur_ = &text_;
    } else if (d == ".data") {
      cur_ = &data_;
    } else if (d == ".globl" || d == ".global") {
      // Accepted for compatibility; all symbols are global.
    } else if (d == ".org") {
      expect_args(st, 1);
      cur_->lc = static_cast<std::uint64_t>(imm(a[0]));
    } else if (d == ".align") {
      expect_args(st, 1);
      const std::int64_t n = imm(a[0]);
      if (n < 0 || n > 16) fail(AsmErrorKind::kImmediateOutOfRange, ".align out of range");
      const std::uint64_t align = 1ULL << n;
      const std::uint64_t pad = (align - cur_->lc % align) % align;
      std::vector<std::uint8_t> fill(pad, 0);
      // Pad code with nops when the counter is already instruction-aligned.
      if (cur_->kind == SegmentKind::kText && cur_->lc % 4 == 0) {
        for (std::size_t i = 0; i + 4 <= fill.size(); i += 4) {
          fill[i] = 0x13;
        }
      }
      emit(fill);
    } else if (d == ".byte" || d == ".half" || d == ".word" || d == ".dword") {
      const unsigned width = d == ".byte" ? 1 : d == ".half" ? 2 : d == ".word" ? 4 : 8;
      if (a.empty()) fail(AsmErrorKind::kSyntax, d + " expects values");
      std::vector<std::uint8_t> bytes;
      for (const auto& arg : a) {
        const std::int64_t v = value(arg);
        if (width < 8) {
          const std::int64_t lo = -(std::int64_t{1} << (8 * width - 1));
          const std::int64_t hi = (std::int64_t{1} << (8 * width)) - 1;
          if (v < lo || v > hi) {
            fail(AsmErrorKind::kImmediateOutOfRange,
                 "value " + arg + " does not fit in " + d);
          }
        }
        for (unsigned i = 0; i < width; ++i) {
          bytes.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
        }
      }
      emit(bytes);
    } else if (d == ".asciz" || d == ".string" || d == ".ascii") {
      if (a.empty()) fail(AsmErrorKind::kSyntax, d + " expects a string");
      for (const auto& arg : a) {
        auto bytes = parse_string(arg);
        if (d != ".ascii") bytes.push_back(0);
        emit(bytes);
      }
    } else if (d == ".zero" || d == ".space") {
      expect_args(st, 1);
      const std::int64_t n = imm(a[0]);
      if (n < 0 || n > (64 << 20)) fail(AsmErrorKind::kImmediateOutOfRange, d + " size out of range");
      emit(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0));
    } else {
      fail(AsmErrorKind::kUnknownMnemonic, "unknown directive '" + d + "'");
    }
  }

  std::vector<Statement> statements_;
  std::map<std::string, std::uint64_t> symbols_;
  std::vector<Segment> segments_;
  Section text_{kDefaultTextBase, SegmentKind::kText};
  Section data_{kDefaultDataBase, SegmentKind::kData};
  Section* cur_ = &text_;
  bool final_ = false;
  int line_ = 0;
};

constexpr char kImageMagic[8] = {'C', 'O', 'N', 'C', 'H', 'I', 'M', 'G'};
constexpr std::uint32_t kImageVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  for (unsigned i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>(static_cast<std::uint64_t>(v) >> (8 * i)));
  }
}

template <typename T>
T get(std::istream& in) {
  std::uint64_t v = 0;
  for (unsigned i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("truncated image");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace

Program assemble(const SourceUnit& src) { return Assembler(src).run(); }

void write_image(const Program& program, std::ostream& out) {
  out.write(kImageMagic, sizeof kImageMagic);
  put<std::uint32_t>(out, kImageVersion);
  put<std::uint64_t>(out, program.entry);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(program.segments.size()));
  for (const auto& s : program.segments) {
    put<std::uint64_t>(out, s.base);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(s.kind));
    put<std::uint64_t>(out, s.bytes.size());
    out.write(reinterpret_cast<const char*>(s.bytes.data()),
              static_cast<std::streamsize>(s.bytes.size()));
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(program.symbols.size()));
  for (const auto& [name, addr] : program.symbols) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, addr);
  }
}

bool looks_like_image(std::istream& in) {
  char magic[sizeof kImageMagic] = {};
  const auto pos = in.tellg();
  in.read(magic, sizeof magic);
  const bool ok = in.gcount() == sizeof magic &&
                  std::equal(std::begin(magic), std::end(magic), std::begin(kImageMagic));
  in.clear();
  in.seekg(pos);
  return ok;
}

Program read_image(std::istream& in) {
  char magic[sizeof kImageMagic] = {};
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic ||
      !std::equal(std::begin(magic), std::end(magic), std::begin(kImageMagic))) {
    throw std::runtime_error("not a conch image");
  }
  if (get<std::uint32_t>(in) != kImageVersion) {
    throw std::runtime_error("unsupported image version");
  }
  Program p;
  p.entry = get<std::uint64_t>(in);
  const auto nseg = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < nseg; ++i) {
    Segment s;
    s.base = get<std::uint64_t>(in);
    const auto kind = get<std::uint8_t>(in);
    if (kind > 1) throw std::runtime_error("bad segment kind");
    s.kind = static_cast<SegmentKind>(kind);
    const auto size = get<std::uint64_t>(in);
    if (size > (1ULL << 32)) throw std::runtime_error("segment too large");
    s.bytes.resize(size);
    in.read(reinterpret_cast<char*>(s.bytes.data()), static_cast<std::streamsize>(size));
    if (static_cast<std::uint64_t>(in.gcount()) != size) throw std::runtime_error("truncated image");
    p.segments.push_back(std::move(s));
  }
  const auto nsym = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < nsym; ++i) {
    const auto len = get<std::uint32_t>(in);
    if (len > 4096) throw std::runtime_error("bad symbol name");
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (static_cast<std::uint32_t>(in.gcount()) != len) throw std::runtime_error("truncated image");
    p.symbols[name] = get<std::uint64_t>(in);
  }
  return p;
}

}  // namespace conch

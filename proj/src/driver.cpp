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

#include "conch/driver.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <ostream>
#include <stdexcept>

#include "conch/demos.hpp"

namespace conch {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

ModelRun run_one(const Program& program, const RunConfig& config, CycleModel model) {
  MachineConfig mc;
  mc.mem = config.mem;
  mc.mem.model = model;
  mc.os = config.os;
  mc.seed = config.seed;
  mc.audit = config.audit;
  ModelRun run;
  run.machine = std::make_unique<Machine>(mc);
  run.machine->load_image(program);
  run.result = run.machine->run(config.max_instret);
  return run;
}

void write_bytes(std::ostream& os, const std::vector<std::uint8_t>& bytes) {
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string printable(const std::vector<std::uint8_t>& bytes) {
  std::string s;
  for (std::uint8_t b : bytes) {
    if (b >= 0x20 && b < 0x7F) {
      s.push_back(static_cast<char>(b));
    } else {
      s.push_back('.');
    }
  }
  return s;
}

std::string hex_bytes(const std::vector<std::uint8_t>& bytes) {
  std::string s;
  char buf[4];
  for (std::uint8_t b : bytes) {
    std::snprintf(buf, sizeof buf, "%02x", b);
    s += buf;
  }
  return s;
}

bool contains_bytes(const std::vector<std::uint8_t>& haystack, std::string_view needle) {
  return std::search(haystack.begin(), haystack.end(),
                     std::boyer_moore_searcher(needle.begin(), needle.end())) != haystack.end();
}

std::vector<std::uint8_t> whole_dram(const MemorySystem& mem) {
  std::vector<std::uint8_t> out;
  out.reserve(mem.word_count() * 8);
  const std::uint64_t base = mem.config().dram_base;
  for (std::uint64_t i = 0; i < mem.word_count(); ++i) {
    const std::uint64_t w = mem.dram_word(base + 8 * i);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(w >> (8 * b)));
  }
  return out;
}

struct Check {
  std::string what;
  bool ok;
};

int report_checks(const std::vector<Check>& checks, std::ostream& out) {
  bool all = true;
  for (const Check& c : checks) {
    out << (c.ok ? "  ok      " : "  FAILED  ") << c.what << "\n";
    all = all && c.ok;
  }
  return all ? 0 : kExitDemoFailed;
}

std::vector<Check> heartbleed_checks(const RunOutcome& o, const Program& p, std::uint64_t seed,
                                     std::ostream& out) {
  const Machine& m = *o.baseline().machine;
  const std::string_view secret = heartbleed_secret();
  const std::vector<std::uint8_t>& response = m.os().output(1);
  out << "response (" << response.size() << " bytes)\n";
  out << "  text  " << printable(response) << "\n";
  out << "  hex   " << hex_bytes(response) << "\n";
  out << "leak averted bytes: " << m.os().leak_averted_bytes() << "\n";

  // The attacker's view of all of DRAM, and the owner's decryption of the key.
  const std::vector<std::uint8_t> dram = whole_dram(m.mem());
  const Key128 owner = derive_thread_key(generate_master_key(seed), 0);
  const std::uint64_t addr = p.symbols.at("secret");
  std::string recovered;
  bool all_tagged = true;
  for (std::uint64_t a = addr; a < addr + secret.size(); a += 8) {
    all_tagged = all_tagged && m.mem().shadow_tag(a);
    const std::uint64_t plain = qarma_decrypt(owner, Tweak{a}, m.mem().dram_word(a));
    for (int b = 0; b < 8; ++b) recovered.push_back(static_cast<char>(plain >> (8 * b)));
  }
  out << "key at rest (tagged, ciphertext): "
      << hex_bytes(std::vector<std::uint8_t>(dram.begin() + static_cast<std::ptrdiff_t>(addr - m.mem().config().dram_base),
                                             dram.begin() + static_cast<std::ptrdiff_t>(addr - m.mem().config().dram_base + secret.size())))
      << "\n";
  out << "decrypted with the owning thread key: " << recovered << "\n";
  return {
      {"program exited with 0", o.baseline().result.exit_code == 0},
      {"over-read bytes were written as ciphertext (leak_averted_bytes > 0)",
       m.os().leak_averted_bytes() > 0},
      {"response contains no plaintext of the key", !contains_bytes(response, secret)},
      {"DRAM contains no plaintext of the key", !contains_bytes(dram, secret)},
      {"key words are tagged in DRAM", all_tagged},
      {"owning thread key recovers the key exactly", recovered == secret},
  };
}

std::vector<Check> granularity_checks(const RunOutcome& o, std::ostream& out) {
  const TagStats& t = o.report.tag_stats;
  char line[128];
  std::snprintf(line, sizeof line,
                "tagged words %llu, oracle-tainted bytes %llu, over-tagged bytes %llu (%.1f%%)\n",
                static_cast<unsigned long long>(t.words_tagged_final),
                static_cast<unsigned long long>(t.bytes_tainted_oracle_final),
                static_cast<unsigned long long>(t.overtagged_bytes), t.overtag_ratio_pct);
  out << line;
  return {
      {"program exited with 0", o.baseline().result.exit_code == 0},
      {"exactly one word is tagged", t.words_tagged_final == 1},
      {"oracle taints exactly the 4 sensitive bytes", t.bytes_tainted_oracle_final == 4},
      {"the 4 public bytes are over-tagged", t.overtagged_bytes == 4},
      {"over-tagging ratio is 50%", t.overtag_ratio_pct == 50.0},
  };
}

std::vector<Check> threads_checks(const RunOutcome& o, const Program& p, std::uint64_t seed,
                                  std::ostream& out) {
  const Machine& m = *o.baseline().machine;
  const Key128 master = generate_master_key(seed);
  const std::uint64_t addr = p.symbols.at("shared");
  const std::uint64_t raw = m.mem().dram_word(addr);
  const std::uint64_t own = qarma_decrypt(derive_thread_key(master, 0), Tweak{addr}, raw);
  const std::uint64_t other = qarma_decrypt(derive_thread_key(master, 1), Tweak{addr}, raw);
  char line[160];
  std::snprintf(line, sizeof line,
                "at rest %016llx; thread 0 key -> %016llx; thread 1 key -> %016llx\n",
                static_cast<unsigned long long>(raw), static_cast<unsigned long long>(own),
                static_cast<unsigned long long>(other));
  out << line;
  const auto code = o.baseline().result.exit_code;
  return {
      {"thread 1 did not read the plaintext", code.has_value() && *code != 1},
      {"thread 0 read its plaintext back", code.has_value() && *code != 2},
      {"program exited with 0", code == 0},
      {"word rests tagged in DRAM", m.mem().shadow_tag(addr)},
      {"owning key decrypts the DRAM word", own == kThreadsDemoValue},
      {"the other thread's key does not", other != kThreadsDemoValue},
  };
}

}  // namespace

const ModelRun* RunOutcome::find(CycleModel model) const {
  for (const ModelRun& r : runs) {
    if (r.machine->mem().model() == model) return &r;
  }
  return nullptr;
}

RunOutcome run_models(const Program& program, const RunConfig& config) {
  std::vector<CycleModel> models{CycleModel::kBaseline};
  for (CycleModel m : config.models) {
    if (std::find(models.begin(), models.end(), m) == models.end()) models.push_back(m);
  }
  RunOutcome outcome;
  if (config.parallel && models.size() > 1) {
    std::vector<std::future<ModelRun>> futures;
    for (CycleModel m : models) {
      futures.push_back(std::async(std::launch::async, run_one, std::cref(program),
                                   std::cref(config), m));
    }
    for (auto& f : futures) outcome.runs.push_back(f.get());
  } else {
    for (CycleModel m : models) outcome.runs.push_back(run_one(program, config, m));
  }

  const ModelRun& base = outcome.baseline();
  for (std::size_t i = 1; i < outcome.runs.size() && outcome.divergence.empty(); ++i) {
    const ModelRun& r = outcome.runs[i];
    const std::string name(to_string(r.machine->mem().model()));
    if (r.result.status != base.result.status) {
      outcome.divergence = name + " ended " + std::string(to_string(r.result.status)) +
                           ", baseline " + std::string(to_string(base.result.status));
    } else if (auto diff = compare_architectural_state(*base.machine, *r.machine); !diff.empty()) {
      outcome.divergence = name + " vs baseline: " + diff;
    }
  }

  std::vector<const Machine*> machines;
  for (const ModelRun& r : outcome.runs) machines.push_back(r.machine.get());
  outcome.report = build_report(machines, config.seed, base.result.exit_code);
  return outcome;
}

int exit_status(const RunOutcome& outcome) {
  const RunResult& r = outcome.baseline().result;
  switch (r.status) {
    case RunStatus::kTrapped: return kExitTrap;
    case RunStatus::kBudgetExceeded: return kExitBudget;
    case RunStatus::kHalted: break;
  }
  return static_cast<int>(static_cast<std::uint64_t>(r.exit_code.value_or(0)) & 0xFF);
}

std::vector<CycleModel> parse_models(std::string_view list) {
  std::vector<CycleModel> models{CycleModel::kBaseline};
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    const std::string_view item = trim(list.substr(pos, comma - pos));
    pos = comma + 1;
    if (item.empty()) continue;
    CycleModel m;
    if (item == "baseline") {
      m = CycleModel::kBaseline;
    } else if (item == "a" || item == "model_a") {
      m = CycleModel::kModelA;
    } else if (item == "b" || item == "model_b") {
      m = CycleModel::kModelB;
    } else {
      throw std::invalid_argument("unknown model '" + std::string(item) +
                                  "' (expected baseline, a or b)");
    }
    if (std::find(models.begin(), models.end(), m) == models.end()) models.push_back(m);
  }
  return models;
}

std::vector<std::uint8_t> parse_hex_bytes(std::string_view hex) {
  hex = trim(hex);
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  std::string digits;
  for (char c : hex) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ':') continue;
    if (!std::isxdigit(static_cast<unsigned char>(c))) {
      throw std::invalid_argument("bad hex digit '" + std::string(1, c) + "'");
    }
    digits.push_back(c);
  }
  if (digits.size() % 2 != 0) throw std::invalid_argument("odd number of hex digits");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < digits.size(); i += 2) {
    unsigned v = 0;
    std::from_chars(digits.data() + i, digits.data() + i + 2, v, 16);
    out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::uint64_t parse_u64(std::string_view text) {
  text = trim(text);
  int base = 10;
  if (text.starts_with("0x") || text.starts_with("0X")) {
    text.remove_prefix(2);
    base = 16;
  }
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, base);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an unsigned number: '" + std::string(text) + "'");
  }
  return v;
}

Program load_program(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  if (looks_like_image(in)) return read_image(in);
  return assemble(SourceUnit::from_file(path));
}

DumpRange parse_range(std::string_view text, const Program& program) {
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("range must be addr:len");
  const std::string addr(trim(text.substr(0, colon)));
  DumpRange r;
  if (auto it = program.symbols.find(addr); it != program.symbols.end()) {
    r.addr = it->second;
  } else {
    r.addr = parse_u64(addr);
  }
  r.len = parse_u64(text.substr(colon + 1));
  return r;
}

int cmd_run(const Program& program, const RunConfig& config, ReportFormat format,
            const std::optional<std::string>& report_path, std::ostream& out, std::ostream& err) {
  const RunOutcome o = run_models(program, config);
  const Machine& m = *o.baseline().machine;
  write_bytes(out, m.os().output(1));
  write_bytes(err, m.os().output(2));
  if (!o.baseline().result.diagnostic.empty()) err << "conch: " << o.baseline().result.diagnostic << "\n";
  if (!o.divergence.empty()) {
    err << "conch: internal error, cycle models diverged: " << o.divergence << "\n";
    return kExitTrap;
  }
  const std::string text = emit_report(o.report, format);
  if (report_path) {
    std::ofstream f(*report_path, std::ios::binary);
    if (!f) {
      err << "conch: cannot write report to '" << *report_path << "'\n";
      return kExitUsage;
    }
    f << text;
    err << emit_report(o.report, ReportFormat::kText);
  } else {
    out << text;
  }
  return exit_status(o);
}

int cmd_dump(const Program& program, const RunConfig& config, std::string_view range,
             std::ostream& out, std::ostream& err) {
  DumpRange r;
  try {
    r = parse_range(range, program);
  } catch (const std::exception& e) {
    err << "conch: " << e.what() << "\n";
    return kExitUsage;
  }
  RunConfig c = config;
  c.models = {CycleModel::kBaseline};
  const RunOutcome o = run_models(program, c);
  Machine& m = *o.runs.front().machine;
  if (!m.mem().contains(r.addr, r.len)) {
    err << "conch: dump range outside DRAM\n";
    return kExitUsage;
  }
  if (!o.baseline().result.diagnostic.empty()) err << "conch: " << o.baseline().result.diagnostic << "\n";
  out << format_dump(m.mem().raw_dump(r.addr, r.len, m.state().thread_key));
  const RunStatus s = o.baseline().result.status;
  if (s == RunStatus::kTrapped) return kExitTrap;
  if (s == RunStatus::kBudgetExceeded) return kExitBudget;
  return 0;
}

int cmd_demo(std::string_view name, const RunConfig& config, std::ostream& out, std::ostream& err) {
  const Demo* demo = nullptr;
  try {
    demo = &find_demo(name);
  } catch (const std::invalid_argument& e) {
    err << "conch: " << e.what() << "\n";
    return kExitUsage;
  }
  const Program program = assemble(SourceUnit::from_text(demo->source, demo->name));
  RunConfig c = config;
  c.os = demo->os;
  const RunOutcome o = run_models(program, c);
  out << "demo " << demo->name << "\n";
  if (!o.baseline().result.diagnostic.empty()) out << "  " << o.baseline().result.diagnostic << "\n";

  std::vector<Check> checks;
  if (demo->name == "heartbleed") {
    checks = heartbleed_checks(o, program, c.seed, out);
  } else if (demo->name == "granularity") {
    checks = granularity_checks(o, out);
  } else {
    checks = threads_checks(o, program, c.seed, out);
  }
  checks.push_back({"identical architectural results under every model", o.divergence.empty()});
  out << "\n" << emit_report(o.report, ReportFormat::kText) << "\nchecks\n";
  return report_checks(checks, out);
}

}  // namespace conch

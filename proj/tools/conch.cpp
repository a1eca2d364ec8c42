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

// conch: assemble, run, dump and demo.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "conch/asm.hpp"
#include "conch/demos.hpp"
#include "conch/driver.hpp"

namespace {

struct Options {
  std::string program;
  std::string output;
  std::string models = "baseline,a,b";
  std::optional<std::string> seed;
  std::vector<std::string> maps;
  std::vector<std::string> streams;
  std::uint64_t max_instret = 100'000'000;
  std::optional<std::uint64_t> dram_latency;
  std::optional<std::uint64_t> dram_mib;
  std::optional<std::string> report;
  std::string format;
  std::string range;
  std::string demo;
  bool strict_write = false;
  bool strict_align = false;
  bool no_caches = false;
  bool audit = false;
};

std::pair<std::string, std::string> split_mapping(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("expected <virtual-path>=<value>, got '" + s + "'");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

std::vector<std::uint8_t> read_host_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read host file '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

conch::RunConfig make_config(const Options& o) {
  conch::RunConfig c;
  c.models = conch::parse_models(o.models);
  if (o.seed) {
    c.seed = conch::parse_u64(*o.seed);
  } else if (const char* env = std::getenv("CONCH_SEED")) {
    c.seed = conch::parse_u64(env);
  }
  c.max_instret = o.max_instret;
  if (o.dram_latency) {
    if (*o.dram_latency == 0) throw std::invalid_argument("--dram-latency must be positive");
    c.mem.costs.dram_access_latency = *o.dram_latency;
  }
  if (o.dram_mib) c.mem.dram_bytes = *o.dram_mib << 20;
  c.mem.strict_alignment = o.strict_align;
  c.mem.caches_enabled = !o.no_caches;
  c.os.strict_write = o.strict_write;
  c.audit = o.audit;
  for (const auto& m : o.maps) {
    auto [virt, host] = split_mapping(m);
    c.os.files[virt] = read_host_file(host);
  }
  for (const auto& s : o.streams) {
    auto [virt, hex] = split_mapping(s);
    c.os.files[virt] = conch::parse_hex_bytes(hex);
  }
  return c;
}

void add_run_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--models", o.models, "Comma list of baseline, a, b (baseline always runs)");
  cmd->add_option("--seed", o.seed, "Master-key and getrandom seed (default: $CONCH_SEED or 0)");
  cmd->add_option("--map", o.maps, "Map a host file into the guest: <virt-path>=<host-path>");
  cmd->add_option("--stream", o.streams, "Synthetic guest file: <virt-path>=<hex-bytes>");
  cmd->add_option("--max-instret", o.max_instret, "Instruction budget");
  cmd->add_option("--dram-latency", o.dram_latency, "DRAM access latency in cycles (default 60)");
  cmd->add_option("--dram-mib", o.dram_mib, "Simulated DRAM size in MiB (default 64)");
  cmd->add_flag("--strict-write", o.strict_write, "sys_write of tagged data fails with -EPERM");
  cmd->add_flag("--strict-align", o.strict_align, "Trap on misaligned loads and stores");
  cmd->add_flag("--no-caches", o.no_caches, "Direct-DRAM mode (every access goes to DRAM)");
  cmd->add_flag("--audit", o.audit, "Check tag soundness at every step (slow)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conch: tagged RV64 simulator with selective memory encryption"};
  app.require_subcommand(1);
  Options o;

  auto* asm_cmd = app.add_subcommand("asm", "Assemble a source file into a binary image");
  asm_cmd->add_option("source", o.program, "Assembly source")->required();
  asm_cmd->add_option("-o,--output", o.output, "Output image")->required();

  auto* run_cmd = app.add_subcommand("run", "Run a program under the selected cycle models");
  run_cmd->add_option("program", o.program, "Assembly source or binary image")->required();
  add_run_options(run_cmd, o);
  run_cmd->add_option("--report", o.report, "Write the report to this file");
  run_cmd->add_option("--format", o.format, "Report format: json or text")
      ->check(CLI::IsMember({"json", "text"}));

  auto* dump_cmd = app.add_subcommand("dump", "Run to completion and dump raw DRAM");
  dump_cmd->add_option("program", o.program, "Assembly source or binary image")->required();
  dump_cmd->add_option("--range", o.range, "<addr|symbol>:<len>")->required();
  add_run_options(dump_cmd, o);

  auto* demo_cmd = app.add_subcommand("demo", "Run a bundled demonstration");
  demo_cmd->add_option("name", o.demo, "heartbleed, granularity or threads")
      ->required()
      ->check(CLI::IsMember(conch::demo_names()));
  add_run_options(demo_cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : conch::kExitUsage;
  }

  try {
    if (asm_cmd->parsed()) {
      const conch::Program p = conch::assemble(conch::SourceUnit::from_file(o.program));
      std::ofstream out(o.output, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write '" + o.output + "'");
      conch::write_image(p, out);
      return 0;
    }
    const conch::RunConfig config = make_config(o);
    if (demo_cmd->parsed()) return conch::cmd_demo(o.demo, config, std::cout, std::cerr);

    const conch::Program program = conch::load_program(o.program);
    if (dump_cmd->parsed()) return conch::cmd_dump(program, config, o.range, std::cout, std::cerr);

    conch::ReportFormat format = conch::ReportFormat::kText;
    if (o.format == "json" || (o.format.empty() && o.report)) format = conch::ReportFormat::kJson;
    return conch::cmd_run(program, config, format, o.report, std::cout, std::cerr);
  } catch (const conch::AsmError& e) {
    std::cerr << (o.program.empty() ? "demo" : o.program) << ": " << e.what() << "\n";
    return conch::kExitUsage;
  } catch (const conch::LoadError& e) {
    std::cerr << "conch: " << e.what() << "\n";
    return conch::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "conch: " << e.what() << "\n";
    return conch::kExitUsage;
  }
}

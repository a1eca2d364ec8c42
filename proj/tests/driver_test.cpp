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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "conch/demos.hpp"
#include "test_util.hpp"

namespace conch {
namespace {

RunConfig small_run() {
  RunConfig c;
  c.mem.dram_bytes = testing::kSmallDram;
  return c;
}

TEST(DriverTest, ParseModels) {
  EXPECT_EQ(parse_models("a"),
            (std::vector<CycleModel>{CycleModel::kBaseline, CycleModel::kModelA}));
  EXPECT_EQ(parse_models("b, baseline,a,b"),
            (std::vector<CycleModel>{CycleModel::kBaseline, CycleModel::kModelB,
                                     CycleModel::kModelA}));
  EXPECT_EQ(parse_models(""), std::vector<CycleModel>{CycleModel::kBaseline});
  EXPECT_THROW(parse_models("c"), std::invalid_argument);
}

TEST(DriverTest, ParseNumbersAndHex) {
  EXPECT_EQ(parse_u64("42"), 42u);
  EXPECT_EQ(parse_u64("0x80000000"), 0x80000000u);
  EXPECT_THROW(parse_u64("-1"), std::invalid_argument);
  EXPECT_THROW(parse_u64("12z"), std::invalid_argument);
  EXPECT_THROW(parse_u64(""), std::invalid_argument);
  EXPECT_EQ(parse_hex_bytes("0xdeAD be:ef"), (std::vector<std::uint8_t>{0xde, 0xad, 0xbe, 0xef}));
  EXPECT_TRUE(parse_hex_bytes("").empty());
  EXPECT_THROW(parse_hex_bytes("abc"), std::invalid_argument);
  EXPECT_THROW(parse_hex_bytes("zz"), std::invalid_argument);
}

TEST(DriverTest, ParseRange) {
  const Program p = assemble(".data\nbuf: .zero 16\n");
  const DumpRange a = parse_range("buf:16", p);
  EXPECT_EQ(a.addr, kDefaultDataBase);
  EXPECT_EQ(a.len, 16u);
  const DumpRange b = parse_range("0x80000010:0x20", p);
  EXPECT_EQ(b.addr, 0x80000010u);
  EXPECT_EQ(b.len, 32u);
  EXPECT_THROW(parse_range("buf", p), std::invalid_argument);
  EXPECT_THROW(parse_range("nosuch:4", p), std::invalid_argument);
}

TEST(DriverTest, RunModelsBaselineFirstAndStatus) {
  const Program p = assemble(testing::read_text(testing::program_path("fib.s")));
  RunConfig c = small_run();
  c.models = parse_models("b,a");
  const RunOutcome o = run_models(p, c);
  ASSERT_EQ(o.runs.size(), 3u);
  EXPECT_EQ(o.baseline().machine->mem().model(), CycleModel::kBaseline);
  EXPECT_NE(o.find(CycleModel::kModelA), nullptr);
  EXPECT_TRUE(o.divergence.empty());
  EXPECT_EQ(exit_status(o), 98);
  EXPECT_EQ(o.report.exit_code, 98);

  c.max_instret = 10;
  EXPECT_EQ(exit_status(run_models(p, c)), kExitBudget);
  const Program bad = assemble(".text\n.word 0\n");
  EXPECT_EQ(exit_status(run_models(bad, small_run())), kExitTrap);
}

TEST(DriverTest, ParallelAndSerialAgree) {
  const Program p = assemble(testing::read_text(testing::program_path("copyout.s")));
  RunConfig c = small_run();
  const std::string rec = "SECRETS-0123456789abcdefghijklmn";
  c.os.files["/record"] = {rec.begin(), rec.end()};
  const RunOutcome par = run_models(p, c);
  c.parallel = false;
  const RunOutcome ser = run_models(p, c);
  EXPECT_EQ(emit_report(par.report, ReportFormat::kJson),
            emit_report(ser.report, ReportFormat::kJson));
}

TEST(DriverTest, CmdRunWritesGuestOutputAndReport) {
  const Program p = assemble(testing::read_text(testing::program_path("hello.s")));
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(p, small_run(), ReportFormat::kJson, std::nullopt, out, err), 1);
  EXPECT_EQ(out.str().rfind("hello, conch!\n", 0), 0u);
  EXPECT_NE(out.str().find("\"instret\""), std::string::npos);
}

TEST(DriverTest, CmdDumpShowsCiphertext) {
  const Program p = assemble(
      ".text\nla t0, s\nli t1, 8\nctag.set t0, t1\nli a0, 0\nli a7, 93\necall\n"
      ".data\ns: .dword 0x4141414141414141\n");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_dump(p, small_run(), "s:8", out, err), 0);
  EXPECT_EQ(out.str().find("4141414141414141"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find(" 1\n"), std::string::npos) << out.str();
  EXPECT_EQ(cmd_dump(p, small_run(), "s", out, err), kExitUsage);
}

TEST(DriverTest, DemosPass) {
  for (const std::string& name : demo_names()) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_demo(name, small_run(), out, err), 0) << out.str() << err.str();
    EXPECT_EQ(out.str().find("FAILED"), std::string::npos) << out.str();
  }
  std::ostringstream out, err;
  EXPECT_EQ(cmd_demo("nope", small_run(), out, err), kExitUsage);
}

TEST(DriverTest, LoadProgramDetectsImages) {
  const auto dir = std::filesystem::temp_directory_path() / "conch_driver_test";
  std::filesystem::create_directories(dir);
  const Program p = assemble(testing::read_text(testing::program_path("fib.s")));
  {
    std::ofstream f(dir / "fib.img", std::ios::binary);
    write_image(p, f);
  }
  EXPECT_EQ(load_program((dir / "fib.img").string()), p);
  EXPECT_EQ(load_program(testing::program_path("fib.s")), p);
  EXPECT_ANY_THROW(load_program((dir / "missing.s").string()));
  std::filesystem::remove_all(dir);
}

struct CliResult {
  int status = -1;
  std::string out;
};

CliResult cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + std::string(CONCH_CLI_PATH) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

TEST(CliTest, ExitCodes) {
  const std::string prog = testing::program_path("fib.s");
  EXPECT_EQ(cli("run --dram-mib 8 " + prog).status, 98);
  EXPECT_EQ(cli("run --dram-mib 8 --max-instret 5 " + prog).status, kExitBudget);
  EXPECT_EQ(cli("run --models q " + prog).status, kExitUsage);
  EXPECT_EQ(cli("frobnicate").status, kExitUsage);
  EXPECT_EQ(cli("run /nonexistent.s").status, kExitUsage);
}

TEST(CliTest, AssemblyErrorIsUsageError) {
  const auto path = std::filesystem::temp_directory_path() / "conch_cli_bad.s";
  {
    std::ofstream f(path);
    f << ".text\nnop\nbogus x1\n";
  }
  EXPECT_EQ(cli("run " + path.string()).status, kExitUsage);
  std::filesystem::remove(path);
}

TEST(CliTest, AsmThenRunImage) {
  const auto img = std::filesystem::temp_directory_path() / "conch_cli_hello.img";
  ASSERT_EQ(cli("asm " + testing::program_path("hello.s") + " -o " + img.string()).status, 0);
  const CliResult r = cli("run --dram-mib 8 --models baseline " + img.string());
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out.rfind("hello, conch!\n", 0), 0u);
  std::filesystem::remove(img);
}

TEST(CliTest, JsonReportIsByteIdentical) {
  const std::string prog = testing::program_path("copyout.s");
  const std::string args = "run --dram-mib 8 --seed 9 --format json --stream /record=" +
                           std::string("5345435245545321") + " " + prog;
  const CliResult a = cli(args);
  const CliResult b = cli(args);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("\"seed\": 9"), std::string::npos);
}

TEST(CliTest, SeedFromEnvironment) {
  const CliResult r =
      cli("run --dram-mib 8 --format json " + testing::program_path("fib.s"), "CONCH_SEED=77 ");
  EXPECT_NE(r.out.find("\"seed\": 77"), std::string::npos);
}

TEST(CliTest, DemoCommand) {
  const CliResult r = cli("demo heartbleed --dram-mib 8");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out.find("FAILED"), std::string::npos) << r.out;
  // The secret is only printed once: after the owner's decryption.
  const std::string secret(heartbleed_secret());
  const auto first = r.out.find(secret);
  ASSERT_NE(first, std::string::npos);
  EXPECT_EQ(r.out.find(secret, first + 1), std::string::npos);
  EXPECT_NE(r.out.rfind("owning thread key", first), std::string::npos);
  EXPECT_EQ(cli("demo nope").status, kExitUsage);
}

}  // namespace
}  // namespace conch

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

// Multi-model evaluation and the command implementations behind the CLI.
//
// A program is executed once per requested cycle model on fresh machines
// with the same seed and inputs. Baseline always runs; it supplies the
// overhead denominators.

#ifndef CONCH_DRIVER_HPP_
#define CONCH_DRIVER_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conch/asm.hpp"
#include "conch/machine.hpp"
#include "conch/report.hpp"

namespace conch {

// Exit statuses of the CLI other than the guest's own exit code.
inline constexpr int kExitUsage = 2;
inline constexpr int kExitTrap = 3;
inline constexpr int kExitBudget = 4;
inline constexpr int kExitDemoFailed = 5;

struct RunConfig {
  std::vector<CycleModel> models{CycleModel::kBaseline, CycleModel::kModelA,
                                 CycleModel::kModelB};
  std::uint64_t seed = 0;
  std::uint64_t max_instret = 100'000'000;
  MemoryConfig mem;  // `model` is set per run
  OsConfig os;
  bool audit = false;
  bool parallel = true;
};

struct ModelRun {
  std::unique_ptr<Machine> machine;
  RunResult result;
};

struct RunOutcome {
  std::vector<ModelRun> runs;  // baseline first
  RunReport report;
  // Non-empty when the models disagree on architectural state or status.
  std::string divergence;

  const ModelRun& baseline() const { return runs.front(); }
  const ModelRun* find(CycleModel model) const;
};

// Throws LoadError if the image does not fit.
RunOutcome run_models(const Program& program, const RunConfig& config);

// CLI exit status: the guest's exit code (low 8 bits) when it halted,
// kExitTrap or kExitBudget otherwise.
int exit_status(const RunOutcome& outcome);

// "b,a,baseline" style lists. Baseline is added when missing.
std::vector<CycleModel> parse_models(std::string_view list);
// Hex string, optional 0x prefix, whitespace and ':' ignored.
std::vector<std::uint8_t> parse_hex_bytes(std::string_view hex);
// Unsigned decimal or 0x-prefixed hex.
std::uint64_t parse_u64(std::string_view text);

// Source file or binary image, detected by content.
Program load_program(const std::string& path);

struct DumpRange {
  std::uint64_t addr = 0;
  std::uint64_t len = 0;
};
// "addr:len" where addr is a number or a program symbol.
DumpRange parse_range(std::string_view text, const Program& program);

int cmd_run(const Program& program, const RunConfig& config, ReportFormat format,
            const std::optional<std::string>& report_path, std::ostream& out, std::ostream& err);
int cmd_dump(const Program& program, const RunConfig& config, std::string_view range,
             std::ostream& out, std::ostream& err);
int cmd_demo(std::string_view name, const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace conch

#endif  // CONCH_DRIVER_HPP_

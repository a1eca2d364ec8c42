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

#ifndef CONCH_REPORT_HPP_
#define CONCH_REPORT_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conch/machine.hpp"
#include "conch/mem.hpp"

namespace conch {

struct OvertagStats {
  std::uint64_t words_tagged = 0;
  std::uint64_t bytes_tainted = 0;    // oracle bytes, anywhere in DRAM
  std::uint64_t overtagged_bytes = 0; // clean bytes inside tagged words
  double ratio_pct = 0.0;             // overtagged / bytes in tagged words
};

// Scans DRAM after the final flush. Over-tagged bytes are bytes of tagged
// words whose oracle taint is clean.
OvertagStats compute_overtagging(const MemorySystem& mem);

struct TagStats {
  std::uint64_t words_tagged_final = 0;
  std::uint64_t bytes_tainted_oracle_final = 0;
  std::uint64_t overtagged_bytes = 0;
  double overtag_ratio_pct = 0.0;
  // Cipher cycles spent on tagged words with no tainted byte, as a
  // percentage of baseline cycles.
  double overtag_extra_cycles_pct = 0.0;
};

struct ModelCycles {
  std::optional<std::uint64_t> baseline;
  std::optional<std::uint64_t> model_a;
  std::optional<std::uint64_t> model_b;
};

struct RunReport {
  std::uint64_t instret = 0;
  std::map<std::string, std::uint64_t> histogram;  // executed mnemonics only
  ModelCycles cycles;
  std::optional<double> model_a_pct;
  std::optional<double> model_b_pct;
  TagStats tag_stats;
  std::map<CycleModel, MemStats> mem_stats;
  std::uint64_t leak_averted_bytes = 0;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> exit_code;
};

// `runs` holds one finished machine per evaluated model; the baseline run is
// required. Instruction-level fields come from the baseline run.
RunReport build_report(const std::vector<const Machine*>& runs, std::uint64_t seed,
                       std::optional<std::int64_t> exit_code);

enum class ReportFormat { kJson, kText };

std::string emit_report(const RunReport& report, ReportFormat format);

}  // namespace conch

#endif  // CONCH_REPORT_HPP_

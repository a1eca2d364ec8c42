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

#include "conch/report.hpp"

#include <bit>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace conch {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kOvertagBasis =
    "overtag_ratio_pct = clean oracle bytes in tagged words / all bytes in tagged words; "
    "ALU results taint all 8 bytes when any source byte is tainted";

double pct(std::uint64_t model, std::uint64_t baseline) {
  return (static_cast<double>(model) - static_cast<double>(baseline)) /
         static_cast<double>(baseline) * 100.0;
}

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json cache_json(const CacheStats& s) { return Json{{"hits", s.hits}, {"misses", s.misses}}; }

Json mem_json(const MemStats& s) {
  Json j;
  j["dcache"] = cache_json(s.dcache);
  j["icache"] = cache_json(s.icache);
  j["tag_cache"] = cache_json(s.tag_cache);
  j["dram_data_accesses"] = s.dram_data_accesses;
  j["dram_tag_accesses"] = s.dram_tag_accesses;
  j["cipher_blocks"] = s.cipher_blocks;
  return j;
}

Json to_json(const RunReport& r) {
  Json j;
  j["instret"] = r.instret;
  Json hist = Json::object();
  for (const auto& [name, count] : r.histogram) hist[name] = count;
  j["histogram"] = hist;
  j["cycles"] = {{"baseline", opt(r.cycles.baseline)},
                 {"model_a", opt(r.cycles.model_a)},
                 {"model_b", opt(r.cycles.model_b)}};
  j["overhead"] = {{"model_a_pct", opt(r.model_a_pct)}, {"model_b_pct", opt(r.model_b_pct)}};
  const TagStats& t = r.tag_stats;
  j["tag_stats"] = {{"words_tagged_final", t.words_tagged_final},
                    {"bytes_tainted_oracle_final", t.bytes_tainted_oracle_final},
                    {"overtagged_bytes", t.overtagged_bytes},
                    {"overtag_ratio_pct", t.overtag_ratio_pct},
                    {"overtag_extra_cycles_pct", t.overtag_extra_cycles_pct},
                    {"overtag_basis", kOvertagBasis}};
  Json ms = Json::object();
  for (CycleModel m : {CycleModel::kBaseline, CycleModel::kModelA, CycleModel::kModelB}) {
    auto it = r.mem_stats.find(m);
    ms[std::string(to_string(m))] = it == r.mem_stats.end() ? Json(nullptr) : mem_json(it->second);
  }
  j["mem_stats"] = ms;
  j["leak_averted_bytes"] = r.leak_averted_bytes;
  j["seed"] = r.seed;
  j["exit_code"] = opt(r.exit_code);
  return j;
}

std::string fmt_opt(const std::optional<std::uint64_t>& v) {
  return v ? std::to_string(*v) : std::string("-");
}

std::string fmt_pct(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f%%", *v);
  return buf;
}

std::string to_text(const RunReport& r) {
  std::ostringstream out;
  char line[160];
  out << "instructions retired  " << r.instret << "\n";
  out << "exit code             " << (r.exit_code ? std::to_string(*r.exit_code) : "-") << "\n";
  out << "seed                  " << r.seed << "\n\n";
  std::snprintf(line, sizeof line, "%-10s %14s %10s %12s %12s %10s\n", "model", "cycles",
                "overhead", "dram data", "dram tag", "cipher");
  out << line;
  const std::pair<CycleModel, std::optional<std::uint64_t>> rows[] = {
      {CycleModel::kBaseline, r.cycles.baseline},
      {CycleModel::kModelA, r.cycles.model_a},
      {CycleModel::kModelB, r.cycles.model_b}};
  for (const auto& [m, cyc] : rows) {
    if (!cyc) continue;
    const MemStats& s = r.mem_stats.at(m);
    std::optional<double> over;
    if (m == CycleModel::kModelA) over = r.model_a_pct;
    if (m == CycleModel::kModelB) over = r.model_b_pct;
    std::snprintf(line, sizeof line, "%-10s %14s %10s %12llu %12llu %10llu\n",
                  std::string(to_string(m)).c_str(), fmt_opt(cyc).c_str(),
                  m == CycleModel::kBaseline ? "" : fmt_pct(over).c_str(),
                  static_cast<unsigned long long>(s.dram_data_accesses),
                  static_cast<unsigned long long>(s.dram_tag_accesses),
                  static_cast<unsigned long long>(s.cipher_blocks));
    out << line;
  }
  const TagStats& t = r.tag_stats;
  out << "\ntagged words          " << t.words_tagged_final << "\n";
  out << "oracle tainted bytes  " << t.bytes_tainted_oracle_final << "\n";
  std::snprintf(line, sizeof line, "over-tagged bytes     %llu (%.3f%% of tagged bytes)\n",
                static_cast<unsigned long long>(t.overtagged_bytes), t.overtag_ratio_pct);
  out << line;
  std::snprintf(line, sizeof line, "over-tag cipher cost  %.3f%% of baseline cycles\n",
                t.overtag_extra_cycles_pct);
  out << line;
  out << "leak averted bytes    " << r.leak_averted_bytes << "\n";
  if (!r.histogram.empty()) {
    out << "\nhistogram\n";
    for (const auto& [name, count] : r.histogram) {
      std::snprintf(line, sizeof line, "  %-10s %llu\n", name.c_str(),
                    static_cast<unsigned long long>(count));
      out << line;
    }
  }
  return out.str();
}

}  // namespace

OvertagStats compute_overtagging(const MemorySystem& mem) {
  OvertagStats s;
  const std::uint64_t base = mem.config().dram_base;
  for (std::uint64_t i = 0; i < mem.word_count(); ++i) {
    const std::uint64_t addr = base + 8 * i;
    const unsigned tainted = static_cast<unsigned>(std::popcount(mem.byte_taint(addr)));
    s.bytes_tainted += tainted;
    if (mem.logical_tag(addr)) {
      ++s.words_tagged;
      s.overtagged_bytes += 8 - tainted;
    }
  }
  if (s.words_tagged > 0) {
    s.ratio_pct = static_cast<double>(s.overtagged_bytes) /
                  static_cast<double>(8 * s.words_tagged) * 100.0;
  }
  return s;
}

RunReport build_report(const std::vector<const Machine*>& runs, std::uint64_t seed,
                       std::optional<std::int64_t> exit_code) {
  const Machine* base = nullptr;
  for (const Machine* m : runs) {
    if (m->mem().model() == CycleModel::kBaseline) base = m;
  }
  if (base == nullptr) throw std::invalid_argument("report requires a baseline run");

  RunReport r;
  r.seed = seed;
  r.exit_code = exit_code;
  const MachineState& st = base->state();
  r.instret = st.instret;
  for (std::size_t i = 0; i < kOpCount; ++i) {
    if (st.histogram[i] != 0) r.histogram[std::string(mnemonic(static_cast<Op>(i)))] = st.histogram[i];
  }
  for (const Machine* m : runs) {
    const std::uint64_t c = m->state().cycles;
    switch (m->mem().model()) {
      case CycleModel::kBaseline: r.cycles.baseline = c; break;
      case CycleModel::kModelA: r.cycles.model_a = c; break;
      case CycleModel::kModelB: r.cycles.model_b = c; break;
    }
    r.mem_stats[m->mem().model()] = m->mem().stats();
  }
  const std::uint64_t b = *r.cycles.baseline;
  if (b > 0) {
    if (r.cycles.model_a) r.model_a_pct = pct(*r.cycles.model_a, b);
    if (r.cycles.model_b) r.model_b_pct = pct(*r.cycles.model_b, b);
  }
  const OvertagStats o = compute_overtagging(base->mem());
  r.tag_stats.words_tagged_final = o.words_tagged;
  r.tag_stats.bytes_tainted_oracle_final = o.bytes_tainted;
  r.tag_stats.overtagged_bytes = o.overtagged_bytes;
  r.tag_stats.overtag_ratio_pct = o.ratio_pct;
  if (b > 0) {
    const double extra = static_cast<double>(base->mem().overtag_cipher_ops() *
                                             base->config().mem.costs.cipher_block);
    r.tag_stats.overtag_extra_cycles_pct = extra / static_cast<double>(b) * 100.0;
  }
  r.leak_averted_bytes = base->os().leak_averted_bytes();
  return r;
}

std::string emit_report(const RunReport& report, ReportFormat format) {
  if (format == ReportFormat::kText) return to_text(report);
  return to_json(report).dump(2) + "\n";
}

}  // namespace conch

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

#include <gtest/gtest.h>

#include <cstdio>
#include <string>

#include "conch/crypt.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace conch {
namespace {

constexpr std::uint64_t kAddr = 0x80030000;
const Key128 kKey{1, 2};

MemoryConfig mem_config() {
  MemoryConfig c;
  c.dram_bytes = testing::kSmallDram;
  return c;
}

TEST(ReportTest, OvertagArithmetic) {
  MemorySystem m(mem_config());
  EXPECT_EQ(compute_overtagging(m).ratio_pct, 0.0);
  m.tag_set_range(kAddr, 4, kKey);       // 4 of 8 bytes
  m.tag_set_range(kAddr + 64, 16, kKey);  // two full words
  m.store(kAddr + 128, 8, 9, true, 0x00, kKey);  // tagged, all clean
  const OvertagStats s = compute_overtagging(m);
  EXPECT_EQ(s.words_tagged, 4u);
  EXPECT_EQ(s.bytes_tainted, 20u);
  EXPECT_EQ(s.overtagged_bytes, 4u + 8u);
  EXPECT_DOUBLE_EQ(s.ratio_pct, 12.0 / 32.0 * 100.0);
}

TEST(ReportTest, TaintOutsideTaggedWordsIsNotOvertag) {
  MemorySystem m(mem_config());
  m.tag_set_range(kAddr, 16, kKey);
  m.tag_clear_range(kAddr, 8, kKey);
  const OvertagStats s = compute_overtagging(m);
  EXPECT_EQ(s.words_tagged, 1u);
  EXPECT_EQ(s.overtagged_bytes, 0u);
  EXPECT_EQ(s.bytes_tainted, 8u);
}

std::unique_ptr<Machine> run_one(CycleModel model, const std::string& src) {
  auto m = testing::boot(src, testing::small_config(model));
  m->run(100000);
  return m;
}

const char* kTaggingProgram =
    ".text\n"
    "la t0, buf\n"
    "li t1, 20\n"
    "ctag.set t0, t1\n"
    "ld a1, 0(t0)\n"
    "sd a1, 32(t0)\n"
    "li a0, 3\n"
    "li a7, 93\n"
    "ecall\n"
    ".data\nbuf: .zero 64\n";

TEST(ReportTest, BuildsFromModelRuns) {
  auto b = run_one(CycleModel::kBaseline, kTaggingProgram);
  auto a = run_one(CycleModel::kModelA, kTaggingProgram);
  const RunReport r = build_report({b.get(), a.get()}, 11, 3);
  EXPECT_EQ(r.instret, b->state().instret);
  EXPECT_EQ(r.cycles.baseline, b->state().cycles);
  EXPECT_EQ(r.cycles.model_a, a->state().cycles);
  EXPECT_FALSE(r.cycles.model_b.has_value());
  ASSERT_TRUE(r.model_a_pct.has_value());
  EXPECT_DOUBLE_EQ(*r.model_a_pct,
                   (static_cast<double>(a->state().cycles) - b->state().cycles) /
                       b->state().cycles * 100.0);
  EXPECT_FALSE(r.model_b_pct.has_value());
  EXPECT_EQ(r.histogram.at("ecall"), 1u);
  EXPECT_EQ(r.histogram.count("mul"), 0u);
  EXPECT_EQ(r.tag_stats.words_tagged_final, 4u);    // three set + the copy
  EXPECT_EQ(r.tag_stats.bytes_tainted_oracle_final, 28u);
  EXPECT_EQ(r.tag_stats.overtagged_bytes, 4u);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_THROW(build_report({a.get()}, 0, 0), std::invalid_argument);
}

TEST(ReportTest, JsonShapeAndNulls) {
  auto b = run_one(CycleModel::kBaseline, kTaggingProgram);
  const RunReport r = build_report({b.get()}, 42, std::nullopt);
  const auto j = nlohmann::ordered_json::parse(emit_report(r, ReportFormat::kJson));
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  const std::vector<std::string> expected = {"instret",   "histogram",          "cycles",
                                             "overhead",  "tag_stats",          "mem_stats",
                                             "leak_averted_bytes", "seed", "exit_code"};
  EXPECT_EQ(keys, expected);
  EXPECT_TRUE(j["cycles"]["model_a"].is_null());
  EXPECT_TRUE(j["overhead"]["model_b_pct"].is_null());
  EXPECT_TRUE(j["mem_stats"]["model_a"].is_null());
  EXPECT_TRUE(j["mem_stats"]["baseline"].is_object());
  EXPECT_TRUE(j["exit_code"].is_null());
  EXPECT_EQ(j["seed"], 42);
  for (const char* k : {"words_tagged_final", "bytes_tainted_oracle_final", "overtagged_bytes",
                        "overtag_ratio_pct", "overtag_extra_cycles_pct", "overtag_basis"}) {
    EXPECT_TRUE(j["tag_stats"].contains(k)) << k;
  }
}

TEST(ReportTest, JsonIsDeterministic) {
  auto b1 = run_one(CycleModel::kBaseline, kTaggingProgram);
  auto b2 = run_one(CycleModel::kBaseline, kTaggingProgram);
  EXPECT_EQ(emit_report(build_report({b1.get()}, 1, 3), ReportFormat::kJson),
            emit_report(build_report({b2.get()}, 1, 3), ReportFormat::kJson));
}

// Neither format may reveal key material.
TEST(ReportTest, NoKeyMaterial) {
  auto b = run_one(CycleModel::kBaseline, kTaggingProgram);
  const RunReport r = build_report({b.get()}, 0, 3);
  const Key128 master = generate_master_key(0);
  const Key128 thread = derive_thread_key(master, 0);
  for (ReportFormat f : {ReportFormat::kJson, ReportFormat::kText}) {
    const std::string out = emit_report(r, f);
    for (std::uint64_t v : {master.w0, master.k0, thread.w0, thread.k0}) {
      char hex[32];
      std::snprintf(hex, sizeof hex, "%llx", static_cast<unsigned long long>(v));
      EXPECT_EQ(out.find(hex), std::string::npos);
      EXPECT_EQ(out.find(std::to_string(v)), std::string::npos);
    }
    EXPECT_EQ(out.find("key"), std::string::npos);
  }
}

TEST(ReportTest, TextReportMentionsModels) {
  auto b = run_one(CycleModel::kBaseline, kTaggingProgram);
  auto mb = run_one(CycleModel::kModelB, kTaggingProgram);
  const std::string t = emit_report(build_report({b.get(), mb.get()}, 0, 3), ReportFormat::kText);
  EXPECT_NE(t.find("baseline"), std::string::npos);
  EXPECT_NE(t.find("model_b"), std::string::npos);
  EXPECT_EQ(t.find("model_a"), std::string::npos);
  EXPECT_NE(t.find("over-tagged bytes"), std::string::npos);
}

}  // namespace
}  // namespace conch

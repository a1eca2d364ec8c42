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

#include "conch/cache.hpp"

#include <gtest/gtest.h>

#include <stdexcept>

namespace conch {
namespace {

TEST(CacheTest, GeometryValidation) {
  EXPECT_NO_THROW((CacheGeometry{32 * 1024, 8, 64}.validate()));
  EXPECT_NO_THROW((CacheGeometry{4 * 1024, 8, 64}.validate()));
  EXPECT_EQ((CacheGeometry{32 * 1024, 8, 64}.sets()), 64u);
  EXPECT_THROW((CacheGeometry{32 * 1024, 0, 64}.validate()), std::invalid_argument);
  EXPECT_THROW((CacheGeometry{32 * 1024, 8, 12}.validate()), std::invalid_argument);
  EXPECT_THROW((CacheGeometry{3 * 8 * 64, 8, 64}.validate()), std::invalid_argument);
  EXPECT_THROW((CacheGeometry{1000, 8, 64}.validate()), std::invalid_argument);
}

TEST(CacheTest, HitAfterInstall) {
  CacheModel c({1024, 2, 64});  // 8 sets
  EXPECT_FALSE(c.access(0x1000).has_value());
  const std::size_t slot = c.victim(0x1000);
  c.install(slot, 0x1000);
  const auto hit = c.access(0x1000);
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(*hit, slot);
  EXPECT_EQ(c.stats(), (CacheStats{1, 1}));
  EXPECT_EQ(c.line_of(0x103F), 0x1000u);
  EXPECT_EQ(c.data(slot).size(), 8u);
}

TEST(CacheTest, LruEvictionWithinSet) {
  CacheModel c({1024, 2, 64});  // 8 sets, set stride 512
  const std::uint64_t a = 0x0, b = 0x200, d = 0x400;
  c.install(c.victim(a), a);
  c.install(c.victim(b), b);
  ASSERT_TRUE(c.access(a).has_value());  // b is now LRU
  const std::size_t v = c.victim(d);
  EXPECT_EQ(c.line(v).addr, b);
  c.install(v, d);
  EXPECT_TRUE(c.probe(a).has_value());
  EXPECT_FALSE(c.probe(b).has_value());
  EXPECT_TRUE(c.probe(d).has_value());
}

TEST(CacheTest, ProbeHasNoSideEffects) {
  CacheModel c({1024, 2, 64});
  c.install(c.victim(0x40), 0x40);
  const CacheStats before = c.stats();
  EXPECT_TRUE(c.probe(0x40).has_value());
  EXPECT_FALSE(c.probe(0x80).has_value());
  EXPECT_EQ(c.stats(), before);
}

TEST(CacheTest, InstallResetsLineStateAndInvalidateClears) {
  CacheModel c({1024, 2, 64});
  const std::size_t s = c.victim(0x40);
  c.install(s, 0x40);
  c.line(s).dirty = true;
  c.line(s).tags = 0xFF;
  c.install(s, 0x240);
  EXPECT_FALSE(c.line(s).dirty);
  EXPECT_EQ(c.line(s).tags, 0u);
  c.invalidate_all();
  EXPECT_FALSE(c.probe(0x240).has_value());
}

}  // namespace
}  // namespace conch

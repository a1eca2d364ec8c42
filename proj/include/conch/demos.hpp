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

// Bundled demonstration programs.
//
//   heartbleed   a heartbeat handler trusts the request's length field and
//                over-reads into an adjacent private key
//   granularity  four sensitive bytes and four public bytes share one word
//   threads      a tagged word written by thread 0 is read by thread 1

#ifndef CONCH_DEMOS_HPP_
#define CONCH_DEMOS_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "conch/os.hpp"

namespace conch {

struct Demo {
  std::string name;
  std::string source;  // assembly
  OsConfig os;
};

const std::vector<std::string>& demo_names();

// Throws std::invalid_argument for an unknown name.
const Demo& find_demo(std::string_view name);

// The private key the heartbleed demo reads through its sensitive channel.
std::string_view heartbleed_secret();

// The value thread 0 protects in the threads demo.
inline constexpr std::uint64_t kThreadsDemoValue = 0x5EC12E7DA7A0F00DULL;

}  // namespace conch

#endif  // CONCH_DEMOS_HPP_

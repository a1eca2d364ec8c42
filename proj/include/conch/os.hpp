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

// Kernel shim: the syscalls a guest program can issue with `ecall`.
//
// Sensitive input channels tag data on its way into user memory: a read from
// a descriptor opened with O_SENSITIVE, and getrandom, copy bytes through the
// ordinary store path with the tag set. sys_write never emits a tagged word
// in plaintext; it emits the word's at-rest ciphertext instead.

#ifndef CONCH_OS_HPP_
#define CONCH_OS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conch/crypt.hpp"
#include "conch/mem.hpp"

namespace conch {

struct MachineState;

inline constexpr std::uint64_t kOSensitive = 0x0200'0000;

namespace sys {
inline constexpr std::uint64_t kOpenat = 56;
inline constexpr std::uint64_t kClose = 57;
inline constexpr std::uint64_t kRead = 63;
inline constexpr std::uint64_t kWrite = 64;
inline constexpr std::uint64_t kExit = 93;
inline constexpr std::uint64_t kExitGroup = 94;
inline constexpr std::uint64_t kGetrandom = 278;
inline constexpr std::uint64_t kThreadSwitch = 5000;
}  // namespace sys

namespace err {
inline constexpr std::int64_t kPerm = -1;
inline constexpr std::int64_t kNoEnt = -2;
inline constexpr std::int64_t kBadF = -9;
inline constexpr std::int64_t kFault = -14;
inline constexpr std::int64_t kMFile = -24;
inline constexpr std::int64_t kNoSys = -38;
}  // namespace err

struct OsConfig {
  // Simulated namespace: virtual path -> contents. "/dev/stdin" feeds fd 0.
  std::map<std::string, std::vector<std::uint8_t>> files;
  // Fail sys_write with -EPERM instead of emitting ciphertext.
  bool strict_write = false;
};

struct FileDesc {
  int fd = -1;
  std::string origin;
  bool sensitive = false;
  std::uint64_t cursor = 0;
};

struct EcallResult {
  std::uint64_t cycles = 0;
  bool halt = false;
  std::int64_t exit_code = 0;
  bool flushed = false;  // a thread switch flushed the caches
};

class OsShim {
 public:
  OsShim(OsConfig config, std::uint64_t seed);

  // Dispatches on a7; the result (if any) goes to a0 with tag 0.
  EcallResult handle_ecall(MachineState& st, MemorySystem& mem);

  // Individual calls, exposed for tests. Buffer addresses are guest addresses.
  std::int64_t sys_openat(const std::string& path, std::uint64_t flags);
  std::int64_t sys_close(std::int64_t fd);
  std::int64_t sys_read(MachineState& st, MemorySystem& mem, std::int64_t fd, std::uint64_t buf,
                        std::uint64_t len, std::uint64_t& cycles);
  std::int64_t sys_write(MachineState& st, MemorySystem& mem, std::int64_t fd, std::uint64_t buf,
                         std::uint64_t len, std::uint64_t& cycles);
  std::int64_t sys_getrandom(MachineState& st, MemorySystem& mem, std::uint64_t buf,
                             std::uint64_t len, std::uint64_t& cycles);
  std::uint64_t sys_thread_switch(MachineState& st, MemorySystem& mem, std::uint64_t tid);

  const FileDesc* descriptor(std::int64_t fd) const;
  // Bytes written to fd 1 / fd 2, or appended to a virtual file.
  const std::vector<std::uint8_t>& output(int fd) const;
  const std::vector<std::uint8_t>* file(const std::string& path) const;

  std::uint64_t leak_averted_bytes() const { return leak_averted_bytes_; }
  // Tagged words whose emitted bytes equalled their plaintext. Must stay 0.
  std::uint64_t write_barrier_violations() const { return write_barrier_violations_; }
  std::size_t registered_threads() const { return key_registry_.size(); }

 private:
  std::optional<std::string> read_path(MachineState& st, MemorySystem& mem, std::uint64_t addr,
                                       std::uint64_t& cycles);

  OsConfig config_;
  std::map<int, FileDesc> fds_;
  std::map<int, std::vector<std::uint8_t>> outputs_;
  Xorshift64Star prng_;
  std::map<std::uint64_t, Key128> key_registry_;
  std::uint64_t leak_averted_bytes_ = 0;
  std::uint64_t write_barrier_violations_ = 0;
};

}  // namespace conch

#endif  // CONCH_OS_HPP_

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

#include "conch/os.hpp"

#include <algorithm>
#include <limits>

#include "conch/machine.hpp"

namespace conch {
namespace {

constexpr std::uint64_t kMaxPath = 4096;
constexpr int kMaxFds = 64;
// Keeps the getrandom stream independent of the master-key draws.
constexpr std::uint64_t kRandomStreamSalt = 0xD1B54A32D192ED03ULL;

const std::vector<std::uint8_t> kEmpty;

std::uint64_t arg(const MachineState& st, unsigned i) { return st.reg(10 + i).value; }

}  // namespace

OsShim::OsShim(OsConfig config, std::uint64_t seed)
    : config_(std::move(config)), prng_(seed ^ kRandomStreamSalt) {
  fds_[0] = {0, "/dev/stdin", false, 0};
  fds_[1] = {1, "/dev/stdout", false, 0};
  fds_[2] = {2, "/dev/stderr", false, 0};
}

EcallResult OsShim::handle_ecall(MachineState& st, MemorySystem& mem) {
  EcallResult r;
  const std::uint64_t num = st.reg(17).value;
  std::int64_t ret = 0;
  switch (num) {
    case sys::kExit:
    case sys::kExitGroup:
      r.halt = true;
      r.exit_code = static_cast<std::int64_t>(arg(st, 0));
      return r;
    case sys::kOpenat: {
      const auto path = read_path(st, mem, arg(st, 1), r.cycles);
      ret = path ? sys_openat(*path, arg(st, 2)) : err::kFault;
      break;
    }
    case sys::kClose:
      ret = sys_close(static_cast<std::int64_t>(arg(st, 0)));
      break;
    case sys::kRead:
      ret = sys_read(st, mem, static_cast<std::int64_t>(arg(st, 0)), arg(st, 1), arg(st, 2),
                     r.cycles);
      break;
    case sys::kWrite:
      ret = sys_write(st, mem, static_cast<std::int64_t>(arg(st, 0)), arg(st, 1), arg(st, 2),
                      r.cycles);
      break;
    case sys::kGetrandom:
      ret = sys_getrandom(st, mem, arg(st, 0), arg(st, 1), r.cycles);
      break;
    case sys::kThreadSwitch:
      r.cycles += sys_thread_switch(st, mem, arg(st, 0));
      r.flushed = true;
      ret = 0;
      break;
    default:
      ret = err::kNoSys;
      break;
  }
  st.set_reg(10, {static_cast<std::uint64_t>(ret), false});
  return r;
}

std::optional<std::string> OsShim::read_path(MachineState& st, MemorySystem& mem,
                                             std::uint64_t addr, std::uint64_t& cycles) {
  std::string path;
  for (std::uint64_t i = 0; i < kMaxPath; ++i) {
    if (!mem.contains(addr + i, 1)) return std::nullopt;
    const LoadResult r = mem.load(addr + i, 1, false, st.thread_key);
    cycles += r.cycles;
    if (r.value == 0) return path;
    path.push_back(static_cast<char>(r.value));
  }
  return std::nullopt;
}

std::int64_t OsShim::sys_openat(const std::string& path, std::uint64_t flags) {
  if (!config_.files.contains(path)) return err::kNoEnt;
  for (int fd = 3; fd < kMaxFds; ++fd) {
    if (!fds_.contains(fd)) {
      fds_[fd] = {fd, path, (flags & kOSensitive) != 0, 0};
      return fd;
    }
  }
  return err::kMFile;
}

std::int64_t OsShim::sys_close(std::int64_t fd) {
  if (fd < 0 || fd > std::numeric_limits<int>::max()) return err::kBadF;
  return fds_.erase(static_cast<int>(fd)) ? 0 : err::kBadF;
}

const FileDesc* OsShim::descriptor(std::int64_t fd) const {
  if (fd < 0 || fd > std::numeric_limits<int>::max()) return nullptr;
  auto it = fds_.find(static_cast<int>(fd));
  return it == fds_.end() ? nullptr : &it->second;
}

std::int64_t OsShim::sys_read(MachineState& st, MemorySystem& mem, std::int64_t fd,
                              std::uint64_t buf, std::uint64_t len, std::uint64_t& cycles) {
  const FileDesc* cd = descriptor(fd);
  if (cd == nullptr || fd == 1 || fd == 2) return err::kBadF;
  FileDesc& d = fds_[static_cast<int>(fd)];
  auto it = config_.files.find(d.origin);
  if (it == config_.files.end()) return 0;  // unmapped stdin reads as EOF
  const std::vector<std::uint8_t>& data = it->second;
  const std::uint64_t avail = d.cursor < data.size() ? data.size() - d.cursor : 0;
  const std::uint64_t n = std::min(len, avail);
  if (n == 0) return 0;
  if (!mem.contains(buf, n)) return err::kFault;
  // The kernel-to-user copy: every byte goes through the store path with the
  // descriptor's sensitivity, so a sensitive payload is tagged before it can
  // ever be written back.
  for (std::uint64_t i = 0; i < n; ++i) {
    cycles += mem.store(buf + i, 1, data[d.cursor + i], d.sensitive, d.sensitive ? 1 : 0,
                        st.thread_key);
  }
  d.cursor += n;
  return static_cast<std::int64_t>(n);
}

std::int64_t OsShim::sys_write(MachineState& st, MemorySystem& mem, std::int64_t fd,
                               std::uint64_t buf, std::uint64_t len, std::uint64_t& cycles) {
  const FileDesc* d = descriptor(fd);
  if (d == nullptr || fd == 0) return err::kBadF;
  if (len == 0) return 0;
  if (!mem.contains(buf, len)) return err::kFault;

  std::vector<std::uint8_t> out;
  out.reserve(len);
  std::uint64_t averted = 0;
  const std::uint64_t end = buf + len;
  for (std::uint64_t word = buf & ~7ULL; word < end; word += 8) {
    const LoadResult r = mem.load(word, 8, false, st.thread_key);
    cycles += r.cycles;
    std::uint64_t emitted = r.value;
    const std::uint64_t lo = std::max(word, buf);
    const std::uint64_t hi = std::min(word + 8, end);
    if (r.tag) {
      if (config_.strict_write) return err::kPerm;
      emitted = qarma_encrypt(st.thread_key, Tweak{word}, r.value);
      if (emitted == r.value) ++write_barrier_violations_;
      averted += hi - lo;
    }
    for (std::uint64_t a = lo; a < hi; ++a) {
      out.push_back(static_cast<std::uint8_t>(emitted >> (8 * (a - word))));
    }
  }
  leak_averted_bytes_ += averted;
  if (fd <= 2) {
    auto& o = outputs_[static_cast<int>(fd)];
    o.insert(o.end(), out.begin(), out.end());
  } else {
    auto& f = config_.files[d->origin];
    FileDesc& fdesc = fds_[static_cast<int>(fd)];
    if (f.size() < fdesc.cursor + out.size()) f.resize(fdesc.cursor + out.size());
    std::copy(out.begin(), out.end(), f.begin() + static_cast<std::ptrdiff_t>(fdesc.cursor));
    fdesc.cursor += out.size();
  }
  return static_cast<std::int64_t>(len);
}

std::int64_t OsShim::sys_getrandom(MachineState& st, MemorySystem& mem, std::uint64_t buf,
                                   std::uint64_t len, std::uint64_t& cycles) {
  if (len == 0) return 0;
  if (!mem.contains(buf, len)) return err::kFault;
  std::uint64_t draw = 0;
  for (std::uint64_t i = 0; i < len; ++i) {
    if (i % 8 == 0) draw = prng_.next();
    const auto byte = static_cast<std::uint8_t>(draw >> (8 * (i % 8)));
    cycles += mem.store(buf + i, 1, byte, true, 1, st.thread_key);
  }
  return static_cast<std::int64_t>(len);
}

std::uint64_t OsShim::sys_thread_switch(MachineState& st, MemorySystem& mem, std::uint64_t tid) {
  // Everything the outgoing thread cached rests encrypted under its own key.
  const std::uint64_t cycles = mem.flush_and_sync(st.thread_key);
  key_registry_[st.current_tid] = st.thread_key;
  auto it = key_registry_.find(tid);
  if (it == key_registry_.end()) {
    it = key_registry_.emplace(tid, derive_thread_key(st.master_key, tid)).first;
  }
  st.thread_key = it->second;
  st.current_tid = tid;
  return cycles;
}

const std::vector<std::uint8_t>& OsShim::output(int fd) const {
  auto it = outputs_.find(fd);
  return it == outputs_.end() ? kEmpty : it->second;
}

const std::vector<std::uint8_t>* OsShim::file(const std::string& path) const {
  auto it = config_.files.find(path);
  return it == config_.files.end() ? nullptr : &it->second;
}

}  // namespace conch

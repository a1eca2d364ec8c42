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

#include "conch/demos.hpp"

#include <stdexcept>

namespace conch {
namespace {

constexpr std::string_view kSecret = "-----RSA KEY 3f9a1c7e5b2d8064---";
static_assert(kSecret.size() == 32);

// The request is one length byte followed by a 15-byte payload; the claimed
// length (47) runs 32 bytes past the payload into the key.
constexpr std::string_view kRequestPayload = "HEARTBEAT-PING!";
static_assert(kRequestPayload.size() == 15);
constexpr unsigned kClaimedLength = 47;

constexpr const char* kHeartbleed = R"(# Heartbeat responder with an unchecked payload length.
        .text
_start:
        # Load the private key through the sensitive channel.
        li      a0, -100
        la      a1, key_path
        li      a2, 0x02000000          # O_RDONLY | O_SENSITIVE
        li      a7, 56
        ecall
        bltz    a0, fail
        la      a1, secret
        li      a2, 32
        li      a7, 63
        ecall
        li      t0, 32
        bne     a0, t0, fail

        # Read the request from an ordinary file.
        li      a0, -100
        la      a1, req_path
        li      a2, 0
        li      a7, 56
        ecall
        bltz    a0, fail
        la      a1, req
        li      a2, 16
        li      a7, 63
        ecall

        # memcpy(bp, pl, payload) with payload taken from the request.
        la      t0, req
        lbu     s1, 0(t0)               # claimed payload length
        addi    t1, t0, 1               # pl
        la      t2, resp                # bp
        li      t3, 0
copy:
        bgeu    t3, s1, reply
        add     t4, t1, t3
        lbu     t5, 0(t4)
        add     t6, t2, t3
        sb      t5, 0(t6)
        addi    t3, t3, 1
        j       copy

reply:
        li      a0, 1
        la      a1, resp
        mv      a2, s1
        li      a7, 64
        ecall
        li      a0, 0
        li      a7, 93
        ecall
fail:
        li      a0, 1
        li      a7, 93
        ecall

        .data
        .align  3
req:    .zero   16
secret: .zero   32
        .align  6
resp:   .zero   64
key_path:
        .asciz  "/secret.key"
req_path:
        .asciz  "/request"
)";

constexpr const char* kGranularity = R"(# Four sensitive bytes and four public bytes in one word.
        .text
_start:
        li      a0, -100
        la      a1, pin_path
        li      a2, 0x02000000          # O_SENSITIVE
        li      a7, 56
        ecall
        bltz    a0, fail
        la      a1, w
        li      a2, 4                   # low half of w
        li      a7, 63
        ecall

        la      t0, w
        li      t1, 0x11223344
        sw      t1, 4(t0)               # public constant into the high half

        li      a0, 0
        li      a7, 93
        ecall
fail:
        li      a0, 1
        li      a7, 93
        ecall

        .data
        .align  3
w:      .dword  0
pin_path:
        .asciz  "/pin"
)";

constexpr const char* kThreads = R"(# Thread 0 protects a word; thread 1 reads it under its own key.
        .text
_start:
        la      s0, shared
        li      s1, 0x5EC12E7DA7A0F00D
        sd      s1, 0(s0)
        li      t0, 8
        ctag.set s0, t0

        li      a0, 1                   # switch to thread 1
        li      a7, 5000
        ecall
        ld      s2, 0(s0)               # decrypted with thread 1's key
        la      t1, b_view
        sd      s2, 0(t1)

        li      a0, 0                   # back to thread 0
        li      a7, 5000
        ecall
        ld      s3, 0(s0)

        li      a0, 1
        beq     s2, s1, done            # cross-key read must not match
        li      a0, 2
        bne     s3, s1, done            # own-key read must match
        li      a0, 0
done:
        li      a7, 93
        ecall

        .data
        .align  6
shared: .dword  0
        .align  6
b_view: .dword  0
)";

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

std::vector<Demo> make_demos() {
  std::vector<Demo> demos;

  Demo hb{"heartbleed", kHeartbleed, {}};
  hb.os.files["/secret.key"] = bytes_of(kSecret);
  std::vector<std::uint8_t> request{static_cast<std::uint8_t>(kClaimedLength)};
  for (char c : kRequestPayload) request.push_back(static_cast<std::uint8_t>(c));
  hb.os.files["/request"] = request;
  demos.push_back(hb);

  Demo gr{"granularity", kGranularity, {}};
  gr.os.files["/pin"] = bytes_of("4321");
  demos.push_back(gr);

  demos.push_back({"threads", kThreads, {}});
  return demos;
}

const std::vector<Demo>& all_demos() {
  static const std::vector<Demo> demos = make_demos();
  return demos;
}

}  // namespace

const std::vector<std::string>& demo_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const Demo& d : all_demos()) n.push_back(d.name);
    return n;
  }();
  return names;
}

const Demo& find_demo(std::string_view name) {
  for (const Demo& d : all_demos()) {
    if (d.name == name) return d;
  }
  throw std::invalid_argument("unknown demo '" + std::string(name) + "'");
}

std::string_view heartbleed_secret() { return kSecret; }

}  // namespace conch

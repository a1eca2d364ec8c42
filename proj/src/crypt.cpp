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

#include "conch/crypt.hpp"

#include <array>
#include <cassert>
#include <cstddef>

namespace conch {
namespace {

// The 64-bit state is a 4x4 matrix of nibbles; cell 0 is the most
// significant nibble and cells are laid out row by row.
using Cells = std::array<std::uint8_t, 16>;
using Perm = std::array<std::uint8_t, 16>;

constexpr std::array<std::uint64_t, 8> kRoundConstants = {
    0x0000000000000000ULL, 0x13198A2E03707344ULL, 0xA4093822299F31D0ULL,
    0x082EFA98EC4E6C89ULL, 0x452821E638D01377ULL, 0xBE5466CF34E90C6CULL,
    0x3F84D5B5B5470917ULL, 0x9216D5D98979FB1BULL};
constexpr std::uint64_t kAlpha = 0xC0AC29B7C97C50DDULL;

constexpr Perm kTau = {0, 11, 6, 13, 10, 1, 12, 7, 5, 14, 3, 8, 15, 4, 9, 2};
constexpr Perm kTweakPerm = {6, 5, 14, 15, 0, 1, 2, 3,
                             7, 12, 13, 4, 8, 9, 10, 11};
// Cells of the tweak that go through the nibble LFSR after each update.
constexpr std::array<std::size_t, 7> kLfsrCells = {0, 1, 3, 4, 8, 11, 13};

constexpr std::array<Cells, 3> kSboxes = {{
    {0, 14, 2, 10, 9, 15, 8, 11, 6, 4, 3, 7, 13, 12, 1, 5},
    {10, 13, 14, 6, 15, 7, 3, 5, 9, 8, 0, 12, 11, 1, 2, 4},
    {11, 6, 8, 15, 12, 0, 9, 14, 3, 7, 4, 5, 13, 2, 1, 10},
}};

// circ(0, rho, rho^2, rho); involutory, so it is also its own inverse.
constexpr std::array<std::array<int, 4>, 4> kMixRotations = {{
    {0, 1, 2, 1},
    {1, 0, 1, 2},
    {2, 1, 0, 1},
    {1, 2, 1, 0},
}};

constexpr Perm invert(const Perm& p) {
  Perm inv{};
  for (std::size_t i = 0; i < 16; ++i) inv[p[i]] = static_cast<std::uint8_t>(i);
  return inv;
}

constexpr Perm kTauInv = invert(kTau);

Cells to_cells(std::uint64_t x) {
  Cells c{};
  for (std::size_t i = 0; i < 16; ++i) {
    c[i] = static_cast<std::uint8_t>((x >> (60 - 4 * i)) & 0xF);
  }
  return c;
}

std::uint64_t from_cells(const Cells& c) {
  std::uint64_t x = 0;
  for (std::uint8_t v : c) x = (x << 4) | v;
  return x;
}

std::uint64_t shuffle(std::uint64_t x, const Perm& p) {
  const Cells in = to_cells(x);
  Cells out{};
  for (std::size_t i = 0; i < 16; ++i) out[i] = in[p[i]];
  return from_cells(out);
}

std::uint8_t rotl4(std::uint8_t v, int n) {
  if (n == 0) return 0;  // zero entry of the matrix, not a rotation by 0
  return static_cast<std::uint8_t>(((v << n) | (v >> (4 - n))) & 0xF);
}

std::uint64_t mix_columns(std::uint64_t x) {
  const Cells in = to_cells(x);
  Cells out{};
  for (std::size_t row = 0; row < 4; ++row) {
    for (std::size_t col = 0; col < 4; ++col) {
      std::uint8_t acc = 0;
      for (std::size_t k = 0; k < 4; ++k) {
        acc ^= rotl4(in[4 * k + col], kMixRotations[row][k]);
      }
      out[4 * row + col] = acc;
    }
  }
  return from_cells(out);
}

std::uint64_t sub_cells(std::uint64_t x, const Cells& sbox) {
  Cells c = to_cells(x);
  for (auto& v : c) v = sbox[v];
  return from_cells(c);
}

// (b3, b2, b1, b0) -> (b0 ^ b1, b3, b2, b1)
std::uint8_t lfsr(std::uint8_t v) {
  return static_cast<std::uint8_t>((v >> 1) | (((v ^ (v >> 1)) & 1) << 3));
}

std::uint64_t tweak_forward(std::uint64_t t) {
  Cells c = to_cells(shuffle(t, kTweakPerm));
  for (std::size_t i : kLfsrCells) c[i] = lfsr(c[i]);
  return from_cells(c);
}

std::uint64_t orthomorphism(std::uint64_t w0) {
  return ((w0 >> 1) | (w0 << 63)) ^ (w0 >> 63);
}

const Cells& sbox_for(QarmaSbox s) {
  return kSboxes[static_cast<std::size_t>(s)];
}

Cells invert_sbox(const Cells& s) {
  Cells inv{};
  for (std::size_t i = 0; i < 16; ++i) inv[s[i]] = static_cast<std::uint8_t>(i);
  return inv;
}

}  // namespace

std::uint64_t qarma64_encrypt(const Key128& key, std::uint64_t tweak,
                              std::uint64_t plaintext, int rounds,
                              QarmaSbox sbox_id) {
  assert(rounds >= 1 && rounds <= 7);
  const Cells& sbox = sbox_for(sbox_id);
  const Cells sbox_inv = invert_sbox(sbox);
  const std::uint64_t w0 = key.w0;
  const std::uint64_t w1 = orthomorphism(w0);
  const std::uint64_t k0 = key.k0;

  std::array<std::uint64_t, 8> tweaks{};
  tweaks[0] = tweak;
  for (int i = 0; i < rounds; ++i) tweaks[i + 1] = tweak_forward(tweaks[i]);

  std::uint64_t s = plaintext ^ w0;
  for (int i = 0; i < rounds; ++i) {
    s ^= k0 ^ tweaks[i] ^ kRoundConstants[i];
    if (i != 0) s = mix_columns(shuffle(s, kTau));
    s = sub_cells(s, sbox);
  }

  const std::uint64_t t = tweaks[rounds];
  s ^= w1 ^ t;
  s = sub_cells(mix_columns(shuffle(s, kTau)), sbox);
  s = shuffle(mix_columns(shuffle(s, kTau)) ^ k0, kTauInv);
  s = shuffle(mix_columns(sub_cells(s, sbox_inv)), kTauInv) ^ w0 ^ t;

  for (int i = rounds - 1; i >= 0; --i) {
    s = sub_cells(s, sbox_inv);
    if (i != 0) s = shuffle(mix_columns(s), kTauInv);
    s ^= k0 ^ tweaks[i] ^ kRoundConstants[i] ^ kAlpha;
  }
  return s ^ w1;
}

// Step-by-step inverse of qarma64_encrypt. The tweak schedule is computed
// forward once and walked in reverse, so no inverse tweak update is needed.
std::uint64_t qarma64_decrypt(const Key128& key, std::uint64_t tweak,
                              std::uint64_t ciphertext, int rounds,
                              QarmaSbox sbox_id) {
  assert(rounds >= 1 && rounds <= 7);
  const Cells& sbox = sbox_for(sbox_id);
  const Cells sbox_inv = invert_sbox(sbox);
  const std::uint64_t w0 = key.w0;
  const std::uint64_t w1 = orthomorphism(w0);
  const std::uint64_t k0 = key.k0;

  std::array<std::uint64_t, 8> tweaks{};
  tweaks[0] = tweak;
  for (int i = 0; i < rounds; ++i) tweaks[i + 1] = tweak_forward(tweaks[i]);

  std::uint64_t s = ciphertext ^ w1;
  for (int i = 0; i < rounds; ++i) {
    s ^= k0 ^ tweaks[i] ^ kRoundConstants[i] ^ kAlpha;
    if (i != 0) s = mix_columns(shuffle(s, kTau));
    s = sub_cells(s, sbox);
  }

  const std::uint64_t t = tweaks[rounds];
  s ^= w0 ^ t;
  s = sub_cells(mix_columns(shuffle(s, kTau)), sbox);
  s = shuffle(mix_columns(shuffle(s, kTau) ^ k0), kTauInv);
  s = shuffle(mix_columns(sub_cells(s, sbox_inv)), kTauInv) ^ w1 ^ t;

  for (int i = rounds - 1; i >= 0; --i) {
    s = sub_cells(s, sbox_inv);
    if (i != 0) s = shuffle(mix_columns(s), kTauInv);
    s ^= k0 ^ tweaks[i] ^ kRoundConstants[i];
  }
  return s ^ w0;
}

Xorshift64Star::Xorshift64Star(std::uint64_t seed)
    : state_(seed ^ 0x9E3779B97F4A7C15ULL) {
  if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t Xorshift64Star::next() {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545F4914F6CDD1DULL;
}

Key128 generate_master_key(std::uint64_t seed) {
  Xorshift64Star rng(seed);
  Key128 key;
  key.w0 = rng.next();
  key.k0 = rng.next();
  return key;
}

Key128 derive_thread_key(const Key128& master, std::uint64_t tid) {
  Key128 key;
  key.w0 = qarma_encrypt(master, Tweak{tid}, 0xA5A5A5A5A5A5A5A5ULL);
  key.k0 = qarma_encrypt(master, Tweak{tid}, 0x5A5A5A5A5A5A5A5AULL);
  return key;
}

}  // namespace conch

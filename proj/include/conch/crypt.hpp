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

#ifndef CONCH_CRYPT_HPP_
#define CONCH_CRYPT_HPP_

#include <cstdint>

namespace conch {

// 128-bit QARMA-64 key: whitening half and core half. Opaque outside the
// cipher and the key registers; nothing serializes it.
struct Key128 {
  std::uint64_t w0 = 0;
  std::uint64_t k0 = 0;

  friend bool operator==(const Key128&, const Key128&) = default;
};

// Tweak input of the cipher. The memory engine always passes the 8-byte
// aligned address of the word being transformed.
struct Tweak {
  std::uint64_t t = 0;
};

// Inner S-box choice of QARMA-64.
enum class QarmaSbox { kSigma0, kSigma1, kSigma2 };

// Generic QARMA-64 with `rounds` forward and `rounds` backward rounds around
// the central construction. Exposed for vector tests of other variants.
std::uint64_t qarma64_encrypt(const Key128& key, std::uint64_t tweak,
                              std::uint64_t plaintext, int rounds,
                              QarmaSbox sbox);
std::uint64_t qarma64_decrypt(const Key128& key, std::uint64_t tweak,
                              std::uint64_t ciphertext, int rounds,
                              QarmaSbox sbox);

// QARMA_5-64-sigma1, the memory-engine cipher.
inline std::uint64_t qarma_encrypt(const Key128& key, Tweak tweak,
                                   std::uint64_t plaintext) {
  return qarma64_encrypt(key, tweak.t, plaintext, 5, QarmaSbox::kSigma1);
}
inline std::uint64_t qarma_decrypt(const Key128& key, Tweak tweak,
                                   std::uint64_t ciphertext) {
  return qarma64_decrypt(key, tweak.t, ciphertext, 5, QarmaSbox::kSigma1);
}

// xorshift64* generator. The seed is mixed with a fixed odd constant so that
// seed 0 still yields a non-zero state.
class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed);
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

// Two draws from Xorshift64Star(seed): w0 first, then k0.
Key128 generate_master_key(std::uint64_t seed);

// w0' = E(master, tid, 0xA5..A5), k0' = E(master, tid, 0x5A..5A).
Key128 derive_thread_key(const Key128& master, std::uint64_t tid);

}  // namespace conch

#endif  // CONCH_CRYPT_HPP_

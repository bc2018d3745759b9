#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The vanet-sim Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vanet {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline constexpr std::size_t kPublicKeySize = crypto_sign_PUBLICKEYBYTES;
inline constexpr std::size_t kPrivateKeySize = crypto_sign_SECRETKEYBYTES;
inline constexpr std::size_t kSignatureSize = crypto_sign_BYTES;
inline constexpr std::size_t kDigestSize = 32;

namespace detail {
inline void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    return true;
  }();
  (void)ready;
}
}  // namespace detail

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t *>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
  auto v = as_bytes(s);
  return {v.begin(), v.end()};
}

inline std::string to_hex(ByteView data) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

inline Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

/// Incremental SHA-256. Each `update` is fed verbatim; callers that hash
/// variable-length fields must length-prefix them themselves.
class Hasher {
 public:
  Hasher() {
    detail::ensure_sodium();
    crypto_hash_sha256_init(&state_);
  }
  Hasher &update(ByteView data) {
    crypto_hash_sha256_update(&state_, data.data(), data.size());
    return *this;
  }
  Hasher &update(std::string_view s) { return update(as_bytes(s)); }
  Bytes finish() {
    Bytes out(kDigestSize);
    crypto_hash_sha256_final(&state_, out.data());
    return out;
  }

 private:
  crypto_hash_sha256_state state_{};
};

inline Bytes sha256(ByteView data) { return Hasher().update(data).finish(); }

inline Bytes sha256(std::initializer_list<ByteView> parts) {
  Hasher h;
  for (auto p : parts) h.update(p);
  return h.finish();
}

inline Bytes hmac_sha256(ByteView key, ByteView message) {
  detail::ensure_sodium();
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  crypto_auth_hmacsha256_update(&st, message.data(), message.size());
  Bytes out(crypto_auth_hmacsha256_BYTES);
  crypto_auth_hmacsha256_final(&st, out.data());
  return out;
}

/// Constant-time equality for authenticators.
inline bool equal_ct(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  return sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

inline void put_u64be(Bytes &out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

/// Ed25519 key material. The public key is the 32-byte point; the private key
/// is libsodium's 64-byte expanded form (seed || public key).
struct Ed25519Keys {
  Bytes public_key;
  Bytes private_key;

  static Ed25519Keys from_seed(ByteView seed32) {
    detail::ensure_sodium();
    if (seed32.size() != crypto_sign_SEEDBYTES) throw std::invalid_argument("seed must be 32 bytes");
    Ed25519Keys k{Bytes(kPublicKeySize), Bytes(kPrivateKeySize)};
    crypto_sign_seed_keypair(k.public_key.data(), k.private_key.data(), seed32.data());
    return k;
  }
};

inline Bytes ed25519_sign(ByteView private_key, ByteView message) {
  detail::ensure_sodium();
  if (private_key.size() != kPrivateKeySize) throw std::invalid_argument("malformed private key");
  Bytes sig(kSignatureSize);
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), private_key.data());
  return sig;
}

inline bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature) {
  detail::ensure_sodium();
  if (public_key.size() != kPublicKeySize || signature.size() != kSignatureSize) return false;
  return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                     public_key.data()) == 0;
}

/// XOR keystream from ChaCha20 (IETF variant, 12-byte nonce).
inline Bytes chacha20_xor(ByteView key32, ByteView nonce12, ByteView data) {
  detail::ensure_sodium();
  if (key32.size() != crypto_stream_chacha20_ietf_KEYBYTES ||
      nonce12.size() != crypto_stream_chacha20_ietf_NONCEBYTES)
    throw std::invalid_argument("bad stream cipher key or nonce size");
  Bytes out(data.size());
  crypto_stream_chacha20_ietf_xor(out.data(), data.data(), data.size(), nonce12.data(), key32.data());
  return out;
}

/// Seeded pseudo-random stream. The engine is std::mt19937_64 (fully specified
/// by the standard); the helpers below avoid the implementation-defined
/// std:: distributions so sequences are identical on every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Independent sub-stream keyed by a label; same (seed, label) -> same stream.
  static Rng derive(std::uint64_t seed, std::string_view label) {
    Bytes s;
    put_u64be(s, seed);
    auto digest = sha256({ByteView(s), as_bytes(label)});
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | digest[i];
    return Rng(v);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below(0)");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  /// Uniform double in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    std::size_t i = 0;
    while (i < n) {
      std::uint64_t v = engine_();
      for (int k = 0; k < 8 && i < n; ++k, ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * k));
    }
    return out;
  }

  template <class T>
  void shuffle(std::vector<T> &items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vanet

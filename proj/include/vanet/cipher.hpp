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

// Per-session authenticated encryption: ChaCha20 keystream, HMAC-SHA256 tag
// (truncated to 16 bytes) over key id, nonce and ciphertext. The key id lets
// a receiver tell "not for my session" apart from "modified in transit".

#include "vanet/crypto.hpp"
#include "vanet/wire.hpp"

#include <stdexcept>

namespace vanet {

struct SessionKey {
  Bytes key;
  Bytes peer_pseudonym;
  double established_at = 0.0;
};

struct EncryptedPayload {
  Bytes key_id;  // 8 bytes
  Bytes nonce;   // 12 bytes
  Bytes ciphertext;
  Bytes tag;  // 16 bytes

  void encode(ByteWriter &w) const { w.raw(key_id).raw(nonce).blob(ciphertext).raw(tag); }
  Bytes encode() const {
    ByteWriter w;
    encode(w);
    return w.take();
  }
  static EncryptedPayload decode(ByteReader &r) {
    EncryptedPayload p;
    p.key_id = r.raw(8);
    p.nonce = r.raw(12);
    p.ciphertext = r.blob();
    p.tag = r.raw(16);
    return p;
  }
  static EncryptedPayload decode(ByteView data) {
    ByteReader r(data);
    auto p = decode(r);
    r.expect_done();
    return p;
  }
};

enum class CipherFailure { decryption, integrity };

class CipherError : public std::runtime_error {
 public:
  CipherError(CipherFailure kind, const char *what) : std::runtime_error(what), kind_(kind) {}
  CipherFailure kind() const { return kind_; }

 private:
  CipherFailure kind_;
};

namespace detail {
inline Bytes subkey(ByteView key, std::string_view label) { return sha256({as_bytes(label), key}); }

inline Bytes payload_tag(ByteView key, const EncryptedPayload &p) {
  auto mac = hmac_sha256(subkey(key, "vanet-mac"), ByteWriter().raw(p.key_id).raw(p.nonce).raw(p.ciphertext).bytes());
  mac.resize(16);
  return mac;
}
}  // namespace detail

inline Bytes key_id(ByteView key) {
  auto id = detail::subkey(key, "vanet-kid");
  id.resize(8);
  return id;
}

inline EncryptedPayload seal(ByteView key, ByteView plaintext, Rng &rng) {
  EncryptedPayload p;
  p.key_id = key_id(key);
  p.nonce = rng.bytes(12);
  p.ciphertext = chacha20_xor(detail::subkey(key, "vanet-enc"), p.nonce, plaintext);
  p.tag = detail::payload_tag(key, p);
  return p;
}

inline Bytes open(ByteView key, const EncryptedPayload &p) {
  if (!equal_ct(p.key_id, key_id(key))) throw CipherError(CipherFailure::decryption, "payload sealed for another session");
  if (p.nonce.size() != 12 || !equal_ct(p.tag, detail::payload_tag(key, p)))
    throw CipherError(CipherFailure::integrity, "payload integrity check failed");
  return chacha20_xor(detail::subkey(key, "vanet-enc"), p.nonce, p.ciphertext);
}

}  // namespace vanet

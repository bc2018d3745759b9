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

// Big-endian record codec shared by every wire message.
//
// Frame layout:   tag:u8 | length:u32 | payload[length]
//
// Tags 0x01-0x06 belong to the beacon/authentication exchange, 0x10-0x14 to
// event dissemination (always inside an encrypted payload).

#include "vanet/crypto.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>
#include <string>

namespace vanet {

enum class MessageTag : std::uint8_t {
  beacon = 0x01,
  auth_commit = 0x02,
  auth_challenge = 0x03,
  auth_response = 0x04,
  auth_result = 0x05,
  pseudonym_change = 0x06,
  corroboration_request = 0x10,
  signed_observation = 0x11,
  aggregated_event = 0x12,
  parking_event = 0x13,
  advert = 0x14,
};

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ByteWriter {
 public:
  ByteWriter &u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
  }
  ByteWriter &u16(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v));
    return *this;
  }
  ByteWriter &u32(std::uint32_t v) {
    for (int i = 3; i >= 0; --i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  ByteWriter &i32(std::int32_t v) { return u32(static_cast<std::uint32_t>(v)); }
  ByteWriter &u64(std::uint64_t v) {
    put_u64be(buf_, v);
    return *this;
  }
  ByteWriter &f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }
  /// Raw bytes, no length prefix (fixed-size fields).
  ByteWriter &raw(ByteView v) {
    buf_.insert(buf_.end(), v.begin(), v.end());
    return *this;
  }
  /// u16 length prefix + bytes.
  ByteWriter &blob(ByteView v) {
    if (v.size() > 0xffff) throw WireError("field too long");
    u16(static_cast<std::uint16_t>(v.size()));
    return raw(v);
  }
  ByteWriter &str(std::string_view s) { return blob(as_bytes(s)); }

  const Bytes &bytes() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  Bytes buf_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::uint8_t u8() { return need(1)[0]; }
  std::uint16_t u16() {
    auto p = need(2);
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
  }
  std::uint32_t u32() {
    auto p = need(4);
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() {
    auto p = need(8);
    std::uint64_t v = 0;
    for (auto b : p) v = (v << 8) | b;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Bytes raw(std::size_t n) {
    auto p = need(n);
    return {p.begin(), p.end()};
  }
  Bytes blob() { return raw(u16()); }
  std::string str() {
    auto b = blob();
    return {b.begin(), b.end()};
  }

  bool done() const { return pos_ == data_.size(); }
  void expect_done() const {
    if (!done()) throw WireError("trailing bytes in record");
  }

 private:
  ByteView need(std::size_t n) {
    if (data_.size() - pos_ < n) throw WireError("truncated record");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  ByteView data_;
  std::size_t pos_ = 0;
};

inline Bytes frame(MessageTag tag, ByteView payload) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(tag)).u32(static_cast<std::uint32_t>(payload.size())).raw(payload);
  return w.take();
}

struct Frame {
  MessageTag tag;
  Bytes payload;
};

inline Frame unframe(ByteView data) {
  ByteReader r(data);
  auto tag = static_cast<MessageTag>(r.u8());
  auto len = r.u32();
  Frame f{tag, r.raw(len)};
  r.expect_done();
  return f;
}

}  // namespace vanet

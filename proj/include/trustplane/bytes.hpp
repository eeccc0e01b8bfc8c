/*
 * Copyright 2026 The trustplane authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trustplane {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

// 32-byte values: digests, PCR registers, nonces.
using Digest32 = std::array<uint8_t, 32>;
using Nonce32 = std::array<uint8_t, 32>;
using KeyId8 = std::array<uint8_t, 8>;

inline ByteView view(const Bytes& b) { return ByteView(b.data(), b.size()); }
inline ByteView view(const std::string& s) {
  return ByteView(reinterpret_cast<const uint8_t*>(s.data()), s.size());
}
template <size_t N>
ByteView view(const std::array<uint8_t, N>& a) {
  return ByteView(a.data(), N);
}

inline void append(Bytes& out, ByteView in) { out.insert(out.end(), in.begin(), in.end()); }
inline void append_u16be(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}
inline void append_u32be(Bytes& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}
inline void append_u64be(Bytes& out, uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<uint8_t>(v >> shift));
}
inline uint16_t read_u16be(const uint8_t* p) {
  return static_cast<uint16_t>((p[0] << 8) | p[1]);
}
inline uint64_t read_u64be(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}
inline uint32_t read_u32be(const uint8_t* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

std::string to_hex(ByteView data);
std::optional<Bytes> from_hex(const std::string& hex);

// Fixed-size variant; fails on length mismatch.
template <size_t N>
std::optional<std::array<uint8_t, N>> array_from_hex(const std::string& hex) {
  auto b = from_hex(hex);
  if (!b || b->size() != N) return std::nullopt;
  std::array<uint8_t, N> out{};
  std::copy(b->begin(), b->end(), out.begin());
  return out;
}

}  // namespace trustplane

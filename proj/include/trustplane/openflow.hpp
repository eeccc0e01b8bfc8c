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

#include <array>
#include <map>
#include <optional>
#include <tuple>

#include "trustplane/bytes.hpp"

namespace trustplane::openflow {

// Fixed protocol subset, 1.0-style framing (no negotiation).
inline constexpr uint8_t kVersion = 0x01;
inline constexpr uint8_t kTypePacketIn = 10;
inline constexpr uint8_t kTypePacketOut = 13;
inline constexpr uint8_t kTypeFlowMod = 14;
inline constexpr uint16_t kPortFlood = 0xfffb;
inline constexpr uint16_t kPortNone = 0xffff;
inline constexpr uint32_t kNoBuffer = 0xffffffff;
inline constexpr uint8_t kReasonNoMatch = 0;
inline constexpr size_t kPacketInHeaderLen = 18;
inline constexpr size_t kPacketOutHeaderLen = 24;  // 16-byte fixed part + one output action
inline constexpr size_t kMtu = 1500;

/// Switch-to-controller encapsulation. The 18-byte header is: version(1),
/// type(1), length(2), xid(4), buffer_id(4), total_len(2), in_port(2),
/// reason(1), pad(1); multi-byte fields big-endian; length = 18 + payload.
struct PacketIn {
  uint32_t xid = 0;
  uint32_t buffer_id = kNoBuffer;
  uint16_t total_len = 0;
  uint16_t in_port = 0;
  uint8_t reason = kReasonNoMatch;
  Bytes payload;

  Bytes encode() const;
  static std::optional<PacketIn> decode(ByteView data);
};

/// Controller-to-switch action carrying the frame back. Fixed part:
/// version(1), type(1), length(2), xid(4), buffer_id(4), in_port(2),
/// actions_len(2)=8, then one output action: type(2)=0, len(2)=8, port(2),
/// max_len(2); payload follows.
struct PacketOut {
  uint32_t xid = 0;
  uint32_t buffer_id = kNoBuffer;
  uint16_t in_port = kPortNone;
  uint16_t out_port = kPortFlood;
  Bytes payload;

  Bytes encode() const;
  static std::optional<PacketOut> decode(ByteView data);
};

// Stream reassembly helpers: every message starts version(1), type(1),
// length(2 BE); length covers the whole message.
std::optional<uint16_t> message_length(ByteView prefix);  // needs >= 4 bytes
std::optional<uint8_t> message_type(ByteView prefix);     // needs >= 2 bytes

// --- test traffic frames: Ethernet II / IPv4 / UDP ---

using MacAddr = std::array<uint8_t, 6>;
inline constexpr size_t kEthHeaderLen = 14;
inline constexpr size_t kIpv4HeaderLen = 20;
inline constexpr size_t kUdpHeaderLen = 8;
inline constexpr size_t kFrameOverhead = kEthHeaderLen + kIpv4HeaderLen + kUdpHeaderLen;

struct UdpFrameSpec {
  MacAddr dst_mac{};
  MacAddr src_mac{};
  uint32_t src_ip = 0;  // host byte order
  uint32_t dst_ip = 0;
  uint16_t src_port = 0;
  uint16_t dst_port = 0;
  uint16_t ip_id = 0;
  Bytes payload;
};

/// Builds one Ethernet+IPv4+UDP frame (valid IPv4 header checksum; UDP
/// checksum zero by design). Frame length = kFrameOverhead + payload size.
Bytes build_udp_frame(const UdpFrameSpec& spec);

/// Parses a whole (unfragmented) UDP frame back into its spec.
std::optional<UdpFrameSpec> parse_udp_frame(ByteView frame);

std::optional<MacAddr> frame_src_mac(ByteView frame);
std::optional<MacAddr> frame_dst_mac(ByteView frame);

/// IPv4-fragments an Ethernet frame so every piece fits `mtu` bytes on the
/// wire. Returns the frame unchanged (single element) when it already fits.
/// Non-IPv4 frames over the MTU cannot be split and yield an empty vector.
std::vector<Bytes> fragment_frame(ByteView frame, size_t mtu = kMtu);

/// Reassembles IPv4 fragments produced by fragment_frame. push() returns the
/// full frame once all pieces of a datagram arrived; unfragmented frames are
/// returned immediately.
class Ipv4Reassembler {
 public:
  std::optional<Bytes> push(ByteView frame);

 private:
  struct Partial {
    std::map<size_t, Bytes> pieces;  // fragment offset (bytes) -> ip payload
    Bytes eth_ip_header;             // eth + ip header template of offset 0
    size_t total = 0;                // known once the last fragment arrives
    bool have_last = false;
  };
  using Key = std::tuple<uint32_t, uint32_t, uint16_t, uint8_t>;  // src, dst, id, proto
  std::map<Key, Partial> partials_;
};

}  // namespace trustplane::openflow

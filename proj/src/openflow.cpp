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

#include "trustplane/openflow.hpp"

#include <algorithm>

namespace trustplane::openflow {
namespace {

constexpr uint16_t kEtherTypeIpv4 = 0x0800;
constexpr uint16_t kMoreFragments = 0x2000;
constexpr uint16_t kFragOffsetMask = 0x1fff;
constexpr uint8_t kProtoUdp = 17;

uint16_t ipv4_checksum(ByteView header) {
  uint32_t sum = 0;
  for (size_t i = 0; i + 1 < header.size(); i += 2)
    sum += (static_cast<uint32_t>(header[i]) << 8) | header[i + 1];
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<uint16_t>(~sum);
}

void put_u16be(Bytes& buf, size_t at, uint16_t v) {
  buf[at] = static_cast<uint8_t>(v >> 8);
  buf[at + 1] = static_cast<uint8_t>(v);
}

struct IpView {
  MacAddr dst_mac, src_mac;
  uint32_t src_ip, dst_ip;
  uint16_t id, flags_frag, total_length;
  uint8_t proto;
  ByteView ip_payload;  // within the original frame
};

std::optional<IpView> view_ipv4(ByteView frame) {
  if (frame.size() < kEthHeaderLen + kIpv4HeaderLen) return std::nullopt;
  if (read_u16be(frame.data() + 12) != kEtherTypeIpv4) return std::nullopt;
  const uint8_t* ip = frame.data() + kEthHeaderLen;
  if ((ip[0] >> 4) != 4 || (ip[0] & 0x0f) != 5) return std::nullopt;
  IpView v;
  std::copy(frame.begin(), frame.begin() + 6, v.dst_mac.begin());
  std::copy(frame.begin() + 6, frame.begin() + 12, v.src_mac.begin());
  v.total_length = read_u16be(ip + 2);
  if (v.total_length < kIpv4HeaderLen ||
      kEthHeaderLen + v.total_length > frame.size())
    return std::nullopt;
  v.id = read_u16be(ip + 4);
  v.flags_frag = read_u16be(ip + 6);
  v.proto = ip[9];
  v.src_ip = read_u32be(ip + 12);
  v.dst_ip = read_u32be(ip + 16);
  v.ip_payload = frame.subspan(kEthHeaderLen + kIpv4HeaderLen,
                               v.total_length - kIpv4HeaderLen);
  return v;
}

}  // namespace

Bytes PacketIn::encode() const {
  Bytes out;
  out.reserve(kPacketInHeaderLen + payload.size());
  out.push_back(kVersion);
  out.push_back(kTypePacketIn);
  append_u16be(out, static_cast<uint16_t>(kPacketInHeaderLen + payload.size()));
  append_u32be(out, xid);
  append_u32be(out, buffer_id);
  append_u16be(out, total_len);
  append_u16be(out, in_port);
  out.push_back(reason);
  out.push_back(0);  // pad
  append(out, view(payload));
  return out;
}

std::optional<PacketIn> PacketIn::decode(ByteView data) {
  if (data.size() < kPacketInHeaderLen) return std::nullopt;
  if (data[0] != kVersion || data[1] != kTypePacketIn) return std::nullopt;
  if (read_u16be(data.data() + 2) != data.size()) return std::nullopt;
  PacketIn msg;
  msg.xid = read_u32be(data.data() + 4);
  msg.buffer_id = read_u32be(data.data() + 8);
  msg.total_len = read_u16be(data.data() + 12);
  msg.in_port = read_u16be(data.data() + 14);
  msg.reason = data[16];
  msg.payload.assign(data.begin() + kPacketInHeaderLen, data.end());
  return msg;
}

Bytes PacketOut::encode() const {
  Bytes out;
  out.reserve(kPacketOutHeaderLen + payload.size());
  out.push_back(kVersion);
  out.push_back(kTypePacketOut);
  append_u16be(out, static_cast<uint16_t>(kPacketOutHeaderLen + payload.size()));
  append_u32be(out, xid);
  append_u32be(out, buffer_id);
  append_u16be(out, in_port);
  append_u16be(out, 8);  // actions_len: one output action
  append_u16be(out, 0);  // OFPAT_OUTPUT
  append_u16be(out, 8);  // action length
  append_u16be(out, out_port);
  append_u16be(out, 0);  // max_len (unused: full frames are carried inline)
  append(out, view(payload));
  return out;
}

std::optional<PacketOut> PacketOut::decode(ByteView data) {
  if (data.size() < kPacketOutHeaderLen) return std::nullopt;
  if (data[0] != kVersion || data[1] != kTypePacketOut) return std::nullopt;
  if (read_u16be(data.data() + 2) != data.size()) return std::nullopt;
  if (read_u16be(data.data() + 14) != 8) return std::nullopt;  // actions_len
  if (read_u16be(data.data() + 16) != 0) return std::nullopt;  // OFPAT_OUTPUT
  if (read_u16be(data.data() + 18) != 8) return std::nullopt;  // action length
  PacketOut msg;
  msg.xid = read_u32be(data.data() + 4);
  msg.buffer_id = read_u32be(data.data() + 8);
  msg.in_port = read_u16be(data.data() + 12);
  msg.out_port = read_u16be(data.data() + 20);
  msg.payload.assign(data.begin() + kPacketOutHeaderLen, data.end());
  return msg;
}

std::optional<uint16_t> message_length(ByteView prefix) {
  if (prefix.size() < 4) return std::nullopt;
  return read_u16be(prefix.data() + 2);
}

std::optional<uint8_t> message_type(ByteView prefix) {
  if (prefix.size() < 2) return std::nullopt;
  return prefix[1];
}

Bytes build_udp_frame(const UdpFrameSpec& spec) {
  Bytes out;
  out.reserve(kFrameOverhead + spec.payload.size());
  append(out, view(spec.dst_mac));
  append(out, view(spec.src_mac));
  append_u16be(out, kEtherTypeIpv4);

  size_t ip_at = out.size();
  out.push_back(0x45);  // v4, IHL 5
  out.push_back(0);     // TOS
  append_u16be(out, static_cast<uint16_t>(kIpv4HeaderLen + kUdpHeaderLen + spec.payload.size()));
  append_u16be(out, spec.ip_id);
  append_u16be(out, 0);  // flags/fragment offset
  out.push_back(64);     // TTL
  out.push_back(kProtoUdp);
  append_u16be(out, 0);  // checksum placeholder
  append_u32be(out, spec.src_ip);
  append_u32be(out, spec.dst_ip);
  uint16_t csum = ipv4_checksum({out.data() + ip_at, kIpv4HeaderLen});
  put_u16be(out, ip_at + 10, csum);

  append_u16be(out, spec.src_port);
  append_u16be(out, spec.dst_port);
  append_u16be(out, static_cast<uint16_t>(kUdpHeaderLen + spec.payload.size()));
  append_u16be(out, 0);  // UDP checksum intentionally unset
  append(out, view(spec.payload));
  return out;
}

std::optional<UdpFrameSpec> parse_udp_frame(ByteView frame) {
  auto ip = view_ipv4(frame);
  if (!ip || ip->proto != kProtoUdp) return std::nullopt;
  if ((ip->flags_frag & (kMoreFragments | kFragOffsetMask)) != 0) return std::nullopt;
  if (ip->ip_payload.size() < kUdpHeaderLen) return std::nullopt;
  uint16_t udp_len = read_u16be(ip->ip_payload.data() + 4);
  if (udp_len < kUdpHeaderLen || udp_len > ip->ip_payload.size()) return std::nullopt;
  UdpFrameSpec spec;
  spec.dst_mac = ip->dst_mac;
  spec.src_mac = ip->src_mac;
  spec.src_ip = ip->src_ip;
  spec.dst_ip = ip->dst_ip;
  spec.ip_id = ip->id;
  spec.src_port = read_u16be(ip->ip_payload.data());
  spec.dst_port = read_u16be(ip->ip_payload.data() + 2);
  spec.payload.assign(ip->ip_payload.begin() + kUdpHeaderLen, ip->ip_payload.begin() + udp_len);
  return spec;
}

std::optional<MacAddr> frame_src_mac(ByteView frame) {
  if (frame.size() < 12) return std::nullopt;
  MacAddr mac;
  std::copy(frame.begin() + 6, frame.begin() + 12, mac.begin());
  return mac;
}

std::optional<MacAddr> frame_dst_mac(ByteView frame) {
  if (frame.size() < 6) return std::nullopt;
  MacAddr mac;
  std::copy(frame.begin(), frame.begin() + 6, mac.begin());
  return mac;
}

std::vector<Bytes> fragment_frame(ByteView frame, size_t mtu) {
  if (frame.size() <= mtu) return {Bytes(frame.begin(), frame.end())};
  auto ip = view_ipv4(frame);
  if (!ip || mtu < kEthHeaderLen + kIpv4HeaderLen + 8) return {};

  // Per-fragment IP payload capacity, in whole 8-byte units.
  size_t chunk_cap = (mtu - kEthHeaderLen - kIpv4HeaderLen) & ~size_t{7};
  ByteView payload = ip->ip_payload;

  std::vector<Bytes> out;
  size_t offset = 0;
  while (offset < payload.size()) {
    size_t chunk = std::min(chunk_cap, payload.size() - offset);
    bool last = offset + chunk == payload.size();

    Bytes piece(frame.begin(), frame.begin() + kEthHeaderLen + kIpv4HeaderLen);
    put_u16be(piece, kEthHeaderLen + 2, static_cast<uint16_t>(kIpv4HeaderLen + chunk));
    uint16_t frag = static_cast<uint16_t>(offset / 8);
    if (!last) frag |= kMoreFragments;
    put_u16be(piece, kEthHeaderLen + 6, frag);
    put_u16be(piece, kEthHeaderLen + 10, 0);
    uint16_t csum = ipv4_checksum({piece.data() + kEthHeaderLen, kIpv4HeaderLen});
    put_u16be(piece, kEthHeaderLen + 10, csum);
    append(piece, payload.subspan(offset, chunk));
    out.push_back(std::move(piece));
    offset += chunk;
  }
  return out;
}

std::optional<Bytes> Ipv4Reassembler::push(ByteView frame) {
  auto ip = view_ipv4(frame);
  if (!ip) return Bytes(frame.begin(), frame.end());  // non-IP passes through
  if ((ip->flags_frag & (kMoreFragments | kFragOffsetMask)) == 0)
    return Bytes(frame.begin(), frame.end());

  Key key{ip->src_ip, ip->dst_ip, ip->id, ip->proto};
  Partial& partial = partials_[key];
  size_t offset = static_cast<size_t>(ip->flags_frag & kFragOffsetMask) * 8;
  partial.pieces[offset] = Bytes(ip->ip_payload.begin(), ip->ip_payload.end());
  if (offset == 0)
    partial.eth_ip_header.assign(frame.begin(), frame.begin() + kEthHeaderLen + kIpv4HeaderLen);
  if ((ip->flags_frag & kMoreFragments) == 0) {
    partial.have_last = true;
    partial.total = offset + ip->ip_payload.size();
  }

  if (!partial.have_last || partial.eth_ip_header.empty()) return std::nullopt;
  size_t covered = 0;
  for (const auto& [at, piece] : partial.pieces) {
    if (at != covered) return std::nullopt;  // hole
    covered += piece.size();
  }
  if (covered != partial.total) return std::nullopt;

  Bytes whole = partial.eth_ip_header;
  put_u16be(whole, kEthHeaderLen + 2, static_cast<uint16_t>(kIpv4HeaderLen + partial.total));
  put_u16be(whole, kEthHeaderLen + 6, 0);
  put_u16be(whole, kEthHeaderLen + 10, 0);
  uint16_t csum = ipv4_checksum({whole.data() + kEthHeaderLen, kIpv4HeaderLen});
  put_u16be(whole, kEthHeaderLen + 10, csum);
  for (const auto& [at, piece] : partial.pieces) append(whole, view(piece));
  partials_.erase(key);
  return whole;
}

}  // namespace trustplane::openflow

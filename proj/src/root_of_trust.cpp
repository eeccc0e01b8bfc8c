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

#include "trustplane/root_of_trust.hpp"

#include <algorithm>

#include "trustplane/digest.hpp"

namespace trustplane::rot {

namespace {

// The signed message is the wire prefix up to and including the composite.
Bytes signed_message(const Nonce32& nonce, const std::vector<uint8_t>& selection,
                     const Digest32& composite) {
  Bytes msg;
  append(msg, view(nonce));
  append_u16be(msg, static_cast<uint16_t>(selection.size()));
  append(msg, ByteView(selection.data(), selection.size()));
  append(msg, view(composite));
  return msg;
}

}  // namespace

AttestationIdentity::AttestationIdentity() : key_(pki::generate_ed25519()) {
  public_key_raw_ = pki::ed25519_raw_public(key_.get());
  key_id_ = key_id_for_public(view(public_key_raw_));
}

AttestationIdentity::AttestationIdentity(ByteView seed32)
    : key_(pki::ed25519_from_seed(seed32)) {
  public_key_raw_ = pki::ed25519_raw_public(key_.get());
  key_id_ = key_id_for_public(view(public_key_raw_));
}

Bytes AttestationIdentity::sign(ByteView message) const {
  return pki::sign_ed25519(key_.get(), message);
}

KeyId8 key_id_for_public(ByteView public_key_raw) {
  Digest32 d = sha256(public_key_raw);
  KeyId8 id{};
  std::copy_n(d.begin(), id.size(), id.begin());
  return id;
}

Bytes Quote::encode() const {
  Bytes out;
  append(out, view(nonce));
  append_u16be(out, static_cast<uint16_t>(pcr_selection.size()));
  append(out, ByteView(pcr_selection.data(), pcr_selection.size()));
  append(out, view(pcr_composite));
  append(out, view(key_id));
  append_u16be(out, static_cast<uint16_t>(signature.size()));
  append(out, view(signature));
  return out;
}

std::optional<Quote> Quote::decode(ByteView data) {
  size_t pos = 0;
  auto need = [&](size_t n) { return pos + n <= data.size(); };
  Quote q;
  if (!need(32 + 2)) return std::nullopt;
  std::copy_n(data.begin(), 32, q.nonce.begin());
  pos = 32;
  uint16_t count = read_u16be(data.data() + pos);
  pos += 2;
  if (!need(count)) return std::nullopt;
  q.pcr_selection.assign(data.begin() + pos, data.begin() + pos + count);
  pos += count;
  if (!need(32 + 8 + 2)) return std::nullopt;
  std::copy_n(data.begin() + pos, 32, q.pcr_composite.begin());
  pos += 32;
  std::copy_n(data.begin() + pos, 8, q.key_id.begin());
  pos += 8;
  uint16_t sig_len = read_u16be(data.data() + pos);
  pos += 2;
  if (pos + sig_len != data.size()) return std::nullopt;
  q.signature.assign(data.begin() + pos, data.end());
  return q;
}

Digest32 pcr_composite_for(const measurement::PcrBank& bank,
                           const std::vector<uint8_t>& selection) {
  Bytes concat;
  for (uint8_t idx : selection) append(concat, view(bank.value(idx)));
  return sha256(view(concat));
}

std::optional<Quote> generate_quote(const AttestationIdentity& identity,
                                    const measurement::PcrBank& bank, const Nonce32& nonce,
                                    const std::vector<uint8_t>& selection) {
  if (selection.empty()) return std::nullopt;
  for (uint8_t idx : selection)
    if (!bank.in_range(idx)) return std::nullopt;

  Quote q;
  q.nonce = nonce;
  q.pcr_selection = selection;
  q.pcr_composite = pcr_composite_for(bank, selection);
  q.key_id = identity.key_id();
  Bytes raw_sig = identity.sign(view(signed_message(nonce, selection, q.pcr_composite)));
  q.signature.push_back(kSchemeEd25519);
  append(q.signature, view(raw_sig));
  return q;
}

bool verify_quote(const Quote& quote, const Nonce32& expected_nonce, ByteView public_key_raw) {
  if (quote.signature.size() < 2 || quote.signature[0] != kSchemeEd25519) return false;
  if (public_key_raw.size() != 32) return false;
  pki::KeyPtr pub;
  try {
    pub = pki::ed25519_from_raw_public(public_key_raw);
  } catch (const std::exception&) {
    return false;
  }
  Bytes msg = signed_message(quote.nonce, quote.pcr_selection, quote.pcr_composite);
  ByteView raw_sig(quote.signature.data() + 1, quote.signature.size() - 1);
  if (!pki::verify_ed25519(pub.get(), view(msg), raw_sig)) return false;
  return quote.nonce == expected_nonce;
}

}  // namespace trustplane::rot

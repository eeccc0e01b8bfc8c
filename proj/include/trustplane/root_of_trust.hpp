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

#include <optional>
#include <vector>

#include "trustplane/bytes.hpp"
#include "trustplane/measurement_log.hpp"
#include "trustplane/pki.hpp"

namespace trustplane::rot {

/// Signature scheme tag carried inside the quote's signature field, so a
/// verifier needs no out-of-band scheme agreement.
inline constexpr uint8_t kSchemeEd25519 = 0x01;

/// Signing identity of the simulated root of trust. The private half never
/// leaves this object; verifiers work from the raw public key, which is
/// pre-registered with the CA.
class AttestationIdentity {
 public:
  // Fresh random identity.
  AttestationIdentity();
  // Deterministic identity from a 32-byte seed (for reproducible
  // deployments where the CA allowlist is generated separately).
  explicit AttestationIdentity(ByteView seed32);

  const Bytes& public_key_raw() const { return public_key_raw_; }
  const KeyId8& key_id() const { return key_id_; }

  Bytes sign(ByteView message) const;

 private:
  pki::KeyPtr key_;
  Bytes public_key_raw_;
  KeyId8 key_id_{};
};

KeyId8 key_id_for_public(ByteView public_key_raw);

/// Signed binding of a nonce to a composite over selected PCR registers.
struct Quote {
  Nonce32 nonce{};
  std::vector<uint8_t> pcr_selection;  // register indices, order significant
  Digest32 pcr_composite{};            // H(selected register values, in order)
  KeyId8 key_id{};
  Bytes signature;  // scheme byte followed by the raw signature

  // nonce(32) || count(2 BE) || indices(1 each) || composite(32) ||
  // key_id(8) || sig_len(2) || signature
  Bytes encode() const;
  static std::optional<Quote> decode(ByteView data);
};

Digest32 pcr_composite_for(const measurement::PcrBank& bank,
                           const std::vector<uint8_t>& selection);

/// Quote over the selected registers bound to `nonce`. Returns nullopt when
/// the selection is empty or any index is out of range.
std::optional<Quote> generate_quote(const AttestationIdentity& identity,
                                    const measurement::PcrBank& bank, const Nonce32& nonce,
                                    const std::vector<uint8_t>& selection);

/// True iff the signature verifies under `public_key_raw` and the quote's
/// nonce equals `expected_nonce`. The signed message covers the selection
/// encoding and the composite, so neither can be substituted.
bool verify_quote(const Quote& quote, const Nonce32& expected_nonce, ByteView public_key_raw);

}  // namespace trustplane::rot

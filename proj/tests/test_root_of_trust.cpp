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

#include <doctest.h>

#include "trustplane/root_of_trust.hpp"

using namespace trustplane;
using namespace trustplane::rot;

namespace {

Nonce32 test_nonce(uint8_t fill) {
  Nonce32 n;
  n.fill(fill);
  return n;
}

}  // namespace

TEST_CASE("seeded identities are deterministic, fresh ones are not") {
  Bytes seed(32, 0x11);
  AttestationIdentity a{view(seed)};
  AttestationIdentity b{view(seed)};
  CHECK(a.public_key_raw() == b.public_key_raw());
  CHECK(a.key_id() == b.key_id());
  CHECK(a.key_id() == key_id_for_public(view(a.public_key_raw())));

  AttestationIdentity c, d;
  CHECK(c.public_key_raw() != d.public_key_raw());
  CHECK(c.public_key_raw().size() == 32);
}

TEST_CASE("composite covers the selected registers in order") {
  measurement::PcrBank bank;
  // Frozen: fresh bank composites are hashes of zero registers.
  CHECK(to_hex(view(pcr_composite_for(bank, {10}))) ==
        "66687aadf862bd776c8fc18b8e9f8e20089714856ee233b3902a591d0d5f2925");
  CHECK(to_hex(view(pcr_composite_for(bank, {10, 11}))) ==
        "f5a5fd42d16a20302798ef6ed309979b43003d2320d9f0e8ea9831a92759fb4b");
  // Order of the selection matters once registers differ.
  Digest32 d{};
  d[0] = 1;
  bank.extend(10, d);
  CHECK(pcr_composite_for(bank, {10, 11}) != pcr_composite_for(bank, {11, 10}));
}

TEST_CASE("quote round trip verifies and binds the nonce") {
  AttestationIdentity identity;
  measurement::PcrBank bank;
  Digest32 d{};
  d[5] = 0x5a;
  bank.extend(10, d);

  auto quote = generate_quote(identity, bank, test_nonce(0xA1), {10});
  REQUIRE(quote);
  CHECK(quote->pcr_selection == std::vector<uint8_t>{10});
  CHECK(quote->pcr_composite == pcr_composite_for(bank, {10}));
  CHECK(quote->key_id == identity.key_id());
  CHECK(verify_quote(*quote, test_nonce(0xA1), view(identity.public_key_raw())));

  SUBCASE("wire round trip") {
    auto decoded = Quote::decode(view(quote->encode()));
    REQUIRE(decoded);
    CHECK(decoded->nonce == quote->nonce);
    CHECK(decoded->pcr_composite == quote->pcr_composite);
    CHECK(decoded->signature == quote->signature);
    CHECK(verify_quote(*decoded, test_nonce(0xA1), view(identity.public_key_raw())));
  }
  SUBCASE("wrong nonce fails") {
    CHECK(!verify_quote(*quote, test_nonce(0xA2), view(identity.public_key_raw())));
  }
  SUBCASE("wrong key fails") {
    AttestationIdentity other;
    CHECK(!verify_quote(*quote, test_nonce(0xA1), view(other.public_key_raw())));
  }
  SUBCASE("any tampered field fails") {
    Quote t = *quote;
    t.signature.back() ^= 0x01;
    CHECK(!verify_quote(t, test_nonce(0xA1), view(identity.public_key_raw())));
    t = *quote;
    t.pcr_composite[0] ^= 0x01;
    CHECK(!verify_quote(t, test_nonce(0xA1), view(identity.public_key_raw())));
    t = *quote;
    t.pcr_selection = {11};
    CHECK(!verify_quote(t, test_nonce(0xA1), view(identity.public_key_raw())));
  }
}

TEST_CASE("quote generation validates the selection") {
  AttestationIdentity identity;
  measurement::PcrBank bank;
  CHECK(!generate_quote(identity, bank, test_nonce(1), {}));
  CHECK(!generate_quote(identity, bank, test_nonce(1), {99}));
  CHECK(generate_quote(identity, bank, test_nonce(1), {0, 23}));
}

TEST_CASE("quote decode rejects truncations") {
  AttestationIdentity identity;
  measurement::PcrBank bank;
  auto quote = generate_quote(identity, bank, test_nonce(3), {10});
  REQUIRE(quote);
  Bytes wire = quote->encode();
  for (size_t cut : {size_t{0}, size_t{10}, size_t{33}, wire.size() - 1})
    CHECK(!Quote::decode(ByteView(wire.data(), cut)));
  Bytes extended = wire;
  extended.push_back(0);
  CHECK(!Quote::decode(view(extended)));
}

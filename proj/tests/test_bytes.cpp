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

#include "trustplane/bytes.hpp"
#include "trustplane/digest.hpp"
#include "trustplane/rng.hpp"

using namespace trustplane;

TEST_CASE("hex round trip") {
  Bytes data{0x00, 0x01, 0xab, 0xff, 0x10};
  CHECK(to_hex(view(data)) == "0001abff10");
  auto back = from_hex("0001abff10");
  REQUIRE(back);
  CHECK(*back == data);
  CHECK(from_hex("") == Bytes{});
}

TEST_CASE("hex rejects malformed input") {
  CHECK(!from_hex("abc"));    // odd length
  CHECK(!from_hex("zz"));     // not hex
  CHECK(!from_hex("0x10"));   // prefix is not accepted
  CHECK(!array_from_hex<4>("001122"));
  CHECK(!array_from_hex<4>("0011223344"));
  auto a = array_from_hex<4>("00112233");
  REQUIRE(a);
  CHECK((*a)[3] == 0x33);
}

TEST_CASE("big endian append and read are inverse") {
  Bytes buf;
  append_u16be(buf, 0xbeef);
  append_u32be(buf, 0xdeadbeef);
  append_u64be(buf, 0x0123456789abcdefULL);
  REQUIRE(buf.size() == 14);
  CHECK(read_u16be(buf.data()) == 0xbeef);
  CHECK(read_u32be(buf.data() + 2) == 0xdeadbeef);
  CHECK(read_u64be(buf.data() + 6) == 0x0123456789abcdefULL);
  CHECK(buf[0] == 0xbe);   // network byte order on the wire
  CHECK(buf[6] == 0x01);
}

TEST_CASE("sha256 known vectors") {
  // Standard test vectors.
  CHECK(to_hex(view(sha256(view(std::string{})))) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(to_hex(view(sha256(view(std::string("abc"))))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::string a = "ab", b = "c";
  CHECK(sha256_concat(view(a), view(b)) == sha256(view(std::string("abc"))));
}

TEST_CASE("seeded random source is reproducible and non-repeating") {
  auto& rng = RandomSource::instance();
  rng.set_seed(42);
  Nonce32 n1 = rng.nonce32();
  Nonce32 n2 = rng.nonce32();
  CHECK(n1 != n2);
  rng.set_seed(42);
  CHECK(rng.nonce32() == n1);
  CHECK(rng.nonce32() == n2);
  rng.clear_seed();
  CHECK(!rng.seeded());
  CHECK(rng.nonce32() != rng.nonce32());
}

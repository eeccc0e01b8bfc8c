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

#include "trustplane/sdn_harness.hpp"

using namespace trustplane;
using namespace trustplane::compartment;

TEST_CASE("cipher policy classifies and filters suites") {
  CHECK(suite_is_ecdhe("ECDHE-RSA-AES256-SHA"));
  CHECK(!suite_is_ecdhe("AES256-SHA"));
  CHECK(suite_is_aead("ECDHE-RSA-AES256-GCM-SHA384"));
  CHECK(suite_is_aead("ECDHE-RSA-CHACHA20-POLY1305"));
  CHECK(!suite_is_aead("ECDHE-RSA-AES256-SHA"));  // CBC-SHA1, not AEAD

  CipherPolicy defaults;
  CHECK(defaults.effective_suites() == std::vector<std::string>{"ECDHE-RSA-AES256-SHA"});
  CHECK(defaults.cipher_string() == "ECDHE-RSA-AES256-SHA");

  CipherPolicy hardened;
  hardened.require_ecdhe = true;
  hardened.require_aead = true;
  hardened.allowed_suites = {"ECDHE-RSA-AES256-GCM-SHA384", "ECDHE-RSA-AES256-SHA",
                             "AES128-GCM-SHA256"};
  CHECK(hardened.effective_suites() ==
        std::vector<std::string>{"ECDHE-RSA-AES256-GCM-SHA384"});

  CipherPolicy strict_default;
  strict_default.require_aead = true;  // filters the lone legacy suite away
  CHECK(strict_default.effective_suites().empty());
}

TEST_CASE("operations on unknown handles return the invalid-handle code") {
  TlsCompartment comp;
  TlsContextHandle bogus{0xdeadbeef};
  CHECK(!comp.ssl_get_state(bogus));
  CHECK(!comp.ssl_get_error(bogus, 0));
  Bytes data{1, 2, 3};
  CHECK(comp.ssl_write(bogus, view(data)) == kInvalidHandle);
  auto [n, payload] = comp.ssl_read(bogus, 128);
  CHECK(n == kInvalidHandle);
  CHECK(payload.empty());
  CHECK(!comp.ssl_free(bogus));
  CHECK(!comp.negotiated_suite(bogus));
}

TEST_CASE("enrollment support keeps secrets inside") {
  TlsCompartment comp;
  CHECK(!comp.initialized());
  CHECK(!comp.enroll_make_csr());  // no key yet

  REQUIRE(comp.enroll_generate_key());
  CHECK(comp.secret_needle_count() >= 5);  // two encodings + d, p, q
  auto csr = comp.enroll_make_csr();
  REQUIRE(csr);
  CHECK(pki::csr_proof_of_possession_ok(*csr));
  // The CSR is a public artifact: no needle may appear in it.
  CHECK(comp.count_secret_occurrences(view(*csr)) == 0);
  CHECK(comp.scan_positive_control());
  CHECK(comp.certificate().empty());

  comp.discard_enrollment();
  CHECK(!comp.enroll_make_csr());
  CHECK(!comp.initialized());
}

TEST_CASE("install validates the chain and the key binding") {
  // A certificate for a DIFFERENT key must not install.
  harness::Testbed testbed;
  REQUIRE(testbed.start_services());
  auto session = testbed.enroll();
  REQUIRE(session.state == enroll::SessionState::ENROLLED);
  Bytes good_cert = testbed.comp().certificate();
  Bytes root = testbed.comp().ca_root();
  REQUIRE(!good_cert.empty());

  TlsCompartment other;
  REQUIRE(other.enroll_generate_key());
  CHECK(!other.enroll_install(good_cert, root));  // cert does not match its key
  CHECK(!other.initialized());
}

TEST_CASE("established session through the narrow surface") {
  harness::Testbed::Options options;
  options.comp.capture_egress = true;
  options.comp.trace_ecalls = true;
  harness::Testbed testbed(std::move(options));
  REQUIRE(testbed.start_services());
  REQUIRE(testbed.enroll().state == enroll::SessionState::ENROLLED);
  auto& comp = testbed.comp();
  CHECK(comp.initialized());

  auto stream = net::TcpStream::connect(testbed.controller().endpoint());
  REQUIRE(stream);
  auto handle = comp.ssl_new_and_connect(std::move(*stream));
  REQUIRE(comp.ssl_get_state(handle) == SslState::ESTABLISHED);
  CHECK(comp.negotiated_suite(handle) == std::string("ECDHE-RSA-AES256-SHA"));
  CHECK(comp.negotiated_version(handle) == std::string("TLSv1.2"));

  SUBCASE("empty write sends nothing and returns zero") {
    CHECK(comp.ssl_write(handle, ByteView{}) == 0);
  }
  SUBCASE("read with no pending data reports want-read") {
    auto [n, data] = comp.ssl_read(handle, 512);
    CHECK(n == kWouldBlock);
    CHECK(data.empty());
    CHECK(comp.ssl_get_error(handle, n) == SslError::WANT_READ);
  }
  SUBCASE("request and response round trip") {
    openflow::PacketIn request;
    request.xid = 77;
    request.in_port = 4;
    std::string body = "frame-bytes-0123456789ab";  // parseable MACs
    request.payload = Bytes(body.begin(), body.end());
    request.total_len = static_cast<uint16_t>(request.payload.size());
    Bytes wire = request.encode();
    CHECK(comp.ssl_write(handle, view(wire)) == static_cast<int>(wire.size()));

    Bytes received;
    for (int spins = 0; spins < 2000 && received.size() < openflow::kPacketOutHeaderLen;
         ++spins) {
      auto [n, data] = comp.ssl_read(handle, 4096, 5);
      if (n > 0) append(received, view(data));
      if (n == 0) break;
    }
    auto reply = openflow::PacketOut::decode(view(received));
    REQUIRE(reply);
    CHECK(reply->xid == 77);
    CHECK(reply->payload == request.payload);

    // Everything that left the compartment is ciphertext or public; no
    // secret may scan out of it.
    Bytes egress = comp.egress_snapshot();
    CHECK(!egress.empty());
    CHECK(comp.count_secret_occurrences(view(egress)) == 0);
    CHECK(comp.scan_positive_control());

    auto trace = comp.boundary_trace(handle);
    CHECK(!trace.empty());
    bool saw_write = false;
    for (const auto& record : trace) saw_write |= record.op == "ecall_ssl_write";
    CHECK(saw_write);
  }

  CHECK(comp.ssl_free(handle));
  CHECK(!comp.ssl_get_state(handle));
  CHECK(comp.ssl_write(handle, ByteView{}) == kInvalidHandle);

  // A fresh session over the same credentials works.
  auto stream2 = net::TcpStream::connect(testbed.controller().endpoint());
  REQUIRE(stream2);
  auto handle2 = comp.ssl_new_and_connect(std::move(*stream2));
  CHECK(comp.ssl_get_state(handle2) == SslState::ESTABLISHED);
  CHECK(comp.ssl_free(handle2));
}

TEST_CASE("handles are meaningless across compartments") {
  harness::Testbed testbed;
  REQUIRE(testbed.start_services());
  REQUIRE(testbed.enroll().state == enroll::SessionState::ENROLLED);
  auto stream = net::TcpStream::connect(testbed.controller().endpoint());
  REQUIRE(stream);
  auto handle = testbed.comp().ssl_new_and_connect(std::move(*stream));
  REQUIRE(testbed.comp().ssl_get_state(handle).has_value());

  TlsCompartment stranger;
  CHECK(!stranger.ssl_get_state(handle));
  CHECK(stranger.ssl_write(handle, ByteView{}) == kInvalidHandle);
}

TEST_CASE("handshake against a non-tls peer fails into the error state") {
  TlsCompartment comp;
  harness::Testbed testbed;
  REQUIRE(testbed.start_services());
  REQUIRE(testbed.enroll().state == enroll::SessionState::ENROLLED);

  // Point the established compartment at a plain TCP sink (the agent port
  // speaks no TLS) with a short handshake budget.
  auto stream = net::TcpStream::connect(testbed.agent_endpoint());
  REQUIRE(stream);
  auto handle = testbed.comp().ssl_new_and_connect(std::move(*stream));
  CHECK(testbed.comp().ssl_get_state(handle) == SslState::ERROR);
  Bytes data{1};
  CHECK(testbed.comp().ssl_write(handle, view(data)) == kBadState);
}

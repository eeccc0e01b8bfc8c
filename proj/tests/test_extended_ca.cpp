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

#include <thread>

#include "trustplane/attestation_agent.hpp"
#include "trustplane/digest.hpp"
#include "trustplane/extended_ca.hpp"

using namespace trustplane;

namespace {

struct Platform {
  agent::SimulatedHost host;
  ca::KnownGoodConfig known_good;
  pki::KeyPtr subject_key = pki::generate_rsa(2048);

  Platform() {
    std::string binary = "switch image";
    std::string conf = "listen=tls";
    REQUIRE(host.measure_content("/opt/bin", view(binary)));
    REQUIRE(host.measure_content("/opt/conf", view(conf)));
    known_good.trusted_attestation_keys[host.identity().key_id()] =
        host.identity().public_key_raw();
    known_good.allowed_template_digests.insert(
        measurement::template_digest_for("/opt/bin", sha256(view(binary))));
    known_good.allowed_template_digests.insert(
        measurement::template_digest_for("/opt/conf", sha256(view(conf))));
    known_good.required_paths = {"/opt/bin", "/opt/conf"};
  }

  ca::EnrollmentRequest request_for(ca::CertificateAuthority& authority) {
    ca::EnrollmentRequest request;
    Nonce32 nonce = authority.issue_nonce();
    auto quote = host.quote(nonce, {measurement::kDefaultMeasurementPcr});
    REQUIRE(quote);
    request.quote = *quote;
    request.measurement_list = host.snapshot().list;
    request.csr_der = pki::make_csr(subject_key.get(), "switch-1");
    return request;
  }
};

}  // namespace

TEST_CASE("attested platform receives a certificate chaining to the root") {
  Platform platform;
  ca::CertificateAuthority authority(platform.known_good);
  auto outcome = authority.enroll(platform.request_for(authority));
  REQUIRE(outcome.ok());
  CHECK(!outcome.reason);
  CHECK(pki::verify_cert_chain(*outcome.certificate_der, authority.root_certificate()));
  CHECK(pki::cert_matches_key(*outcome.certificate_der, platform.subject_key.get()));
}

TEST_CASE("each check rejects its fault, in check order") {
  Platform platform;
  ca::CertificateAuthority authority(platform.known_good);

  auto expect_reject = [&](const ca::EnrollmentRequest& request, ca::RejectReason reason) {
    auto outcome = authority.enroll(request);
    CHECK(!outcome.ok());
    REQUIRE(outcome.reason);
    CHECK(*outcome.reason == reason);
  };

  SUBCASE("flipped quote signature") {
    auto request = platform.request_for(authority);
    request.quote.signature.back() ^= 0x01;
    expect_reject(request, ca::RejectReason::QUOTE_SIG);
  }
  SUBCASE("unknown attestation key") {
    auto request = platform.request_for(authority);
    agent::SimulatedHost impostor;
    std::string binary = "switch image";
    std::string conf = "listen=tls";
    REQUIRE(impostor.measure_content("/opt/bin", view(binary)));
    REQUIRE(impostor.measure_content("/opt/conf", view(conf)));
    auto quote = impostor.quote(request.quote.nonce, {measurement::kDefaultMeasurementPcr});
    REQUIRE(quote);
    request.quote = *quote;
    request.measurement_list = impostor.snapshot().list;
    expect_reject(request, ca::RejectReason::QUOTE_SIG);
  }
  SUBCASE("never-issued nonce") {
    auto request = platform.request_for(authority);
    Nonce32 forged;
    forged.fill(0x77);
    auto quote = platform.host.quote(forged, {measurement::kDefaultMeasurementPcr});
    REQUIRE(quote);
    request.quote = *quote;
    expect_reject(request, ca::RejectReason::NONCE);
  }
  SUBCASE("verbatim resubmission") {
    auto request = platform.request_for(authority);
    CHECK(authority.enroll(request).ok());
    expect_reject(request, ca::RejectReason::NONCE);
  }
  SUBCASE("expired nonce") {
    ca::CaOptions options;
    options.nonce_ttl = std::chrono::milliseconds(10);
    ca::CertificateAuthority fast(platform.known_good, options);
    auto request = platform.request_for(fast);
    std::this_thread::sleep_for(std::chrono::milliseconds(40));
    auto outcome = fast.enroll(request);
    REQUIRE(outcome.reason);
    CHECK(*outcome.reason == ca::RejectReason::NONCE);
  }
  SUBCASE("unlogged register extension") {
    Digest32 rogue = sha256(view(std::string("firmware blob")));
    platform.host.extend_unlogged(measurement::kDefaultMeasurementPcr, rogue);
    expect_reject(platform.request_for(authority), ca::RejectReason::PCR_MISMATCH);
  }
  SUBCASE("selection beyond the measurement register") {
    auto request = platform.request_for(authority);
    auto quote = platform.host.quote(request.quote.nonce,
                                     {measurement::kDefaultMeasurementPcr, 11});
    REQUIRE(quote);
    request.quote = *quote;
    expect_reject(request, ca::RejectReason::PCR_MISMATCH);
  }
  SUBCASE("measurement outside the allowlist") {
    std::string implant = "implant";
    REQUIRE(platform.host.measure_content("/tmp/implant", view(implant)));
    expect_reject(platform.request_for(authority), ca::RejectReason::UNKNOWN_MEASUREMENT);
  }
  SUBCASE("required path missing") {
    Platform bare;
    bare.known_good.required_paths.insert("/opt/extra");
    ca::CertificateAuthority strict(bare.known_good);
    auto outcome = strict.enroll(bare.request_for(strict));
    REQUIRE(outcome.reason);
    CHECK(*outcome.reason == ca::RejectReason::MISSING_REQUIRED);
  }
  SUBCASE("corrupted csr") {
    auto request = platform.request_for(authority);
    request.csr_der[request.csr_der.size() / 2] ^= 0x01;
    expect_reject(request, ca::RejectReason::BAD_CSR);
  }
  SUBCASE("earlier check wins when several would fire") {
    std::string implant = "implant";
    REQUIRE(platform.host.measure_content("/tmp/implant", view(implant)));
    auto request = platform.request_for(authority);
    request.quote.signature.back() ^= 0x01;
    request.csr_der[10] ^= 0x01;
    expect_reject(request, ca::RejectReason::QUOTE_SIG);
  }
}

TEST_CASE("a nonce is burned by its first use, success or not") {
  Platform platform;
  ca::CertificateAuthority authority(platform.known_good);
  CHECK(authority.unconsumed_nonce_count() == 0);

  auto request = platform.request_for(authority);
  CHECK(authority.unconsumed_nonce_count() == 1);
  // First attempt fails a LATER check (bad CSR) but still consumes the nonce.
  auto broken = request;
  broken.csr_der[8] ^= 0xff;
  CHECK(authority.enroll(broken).reason == ca::RejectReason::BAD_CSR);
  CHECK(authority.unconsumed_nonce_count() == 0);
  CHECK(authority.enroll(request).reason == ca::RejectReason::NONCE);
}

TEST_CASE("deterministic root seed reproduces the root certificate") {
  Platform platform;
  ca::CaOptions options;
  options.root_seed = Bytes(32, 0x42);
  ca::CertificateAuthority a(platform.known_good, options);
  ca::CertificateAuthority b(platform.known_good, options);
  CHECK(a.root_certificate() == b.root_certificate());
  ca::CertificateAuthority c(platform.known_good);
  CHECK(a.root_certificate() != c.root_certificate());
}

TEST_CASE("wire protocol serves nonces, enrollment, and the root") {
  Platform platform;
  ca::CertificateAuthority authority(platform.known_good);
  ca::CaServer server(authority, {"127.0.0.1", 0}, {"127.0.0.1", 0});
  REQUIRE(server.start());
  ca::CaClient client(server.main_endpoint());

  auto root = client.fetch_root_certificate();
  REQUIRE(root);
  CHECK(*root == authority.root_certificate());

  auto nonce = client.request_nonce();
  REQUIRE(nonce);
  auto quote = platform.host.quote(*nonce, {measurement::kDefaultMeasurementPcr});
  REQUIRE(quote);
  std::string list_text = platform.host.snapshot().list.serialize();
  Bytes csr = pki::make_csr(platform.subject_key.get(), "switch-1");

  auto result = client.submit(quote->encode(), list_text, csr);
  CHECK(result.transport_ok);
  REQUIRE(result.certificate_der);
  CHECK(pki::verify_cert_chain(*result.certificate_der, *root));

  SUBCASE("rejections carry the reason code") {
    auto nonce2 = client.request_nonce();
    REQUIRE(nonce2);
    auto quote2 = platform.host.quote(*nonce2, {measurement::kDefaultMeasurementPcr});
    REQUIRE(quote2);
    Bytes tampered = quote2->encode();
    tampered.back() ^= 0x01;
    auto rejected = client.submit(tampered, list_text, csr);
    CHECK(rejected.transport_ok);
    CHECK(!rejected.certificate_der);
    CHECK(rejected.reason == ca::RejectReason::QUOTE_SIG);
  }
  SUBCASE("garbage connections get a malformed reject") {
    auto stream = net::TcpStream::connect(server.main_endpoint());
    REQUIRE(stream);
    Bytes junk{0x99, 0x00, 0x01};
    REQUIRE(stream->write_all(view(junk)));
    stream->shutdown_write();
    Bytes response;
    REQUIRE(stream->read_to_eof(response));
    REQUIRE(response.size() >= 2);
    CHECK(response[0] == ca::kMsgEnrollReject);
    CHECK(response[1] == static_cast<uint8_t>(ca::RejectReason::MALFORMED));
  }
  server.stop();
}

TEST_CASE("admin interface signs controller certificates without attestation") {
  Platform platform;
  ca::CertificateAuthority authority(platform.known_good);
  ca::CaServer server(authority, {"127.0.0.1", 0}, {"127.0.0.1", 0});
  REQUIRE(server.start());
  CHECK(server.admin_endpoint().port != server.main_endpoint().port);

  ca::CaAdminClient admin(server.admin_endpoint());
  auto root = admin.fetch_root_certificate();
  REQUIRE(root);

  auto controller_key = pki::generate_rsa(2048);
  auto cert = admin.sign_controller_csr(pki::make_csr(controller_key.get(), "sdn-controller"));
  REQUIRE(cert);
  CHECK(pki::verify_cert_chain(*cert, *root));
  CHECK(pki::cert_matches_key(*cert, controller_key.get()));
  CHECK(pki::cert_subject_cn(*cert) == "sdn-controller");

  // The attestation-gated path does not accept admin messages.
  auto stream = net::TcpStream::connect(server.main_endpoint());
  REQUIRE(stream);
  Bytes msg{ca::kMsgAdminRootRequest};
  REQUIRE(stream->write_all(view(msg)));
  stream->shutdown_write();
  Bytes response;
  REQUIRE(stream->read_to_eof(response));
  REQUIRE(!response.empty());
  CHECK(response[0] == ca::kMsgEnrollReject);
  server.stop();
}

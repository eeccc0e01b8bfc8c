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

#include <cstdio>
#include <fstream>

#include "trustplane/attestation_agent.hpp"
#include "trustplane/digest.hpp"

using namespace trustplane;
using namespace trustplane::agent;

namespace {

Nonce32 nonce_of(uint8_t fill) {
  Nonce32 n;
  n.fill(fill);
  return n;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& content) {
    path = "/tmp/trustplane_test_" + std::to_string(::getpid()) + "_" +
           std::to_string(reinterpret_cast<uintptr_t>(this));
    std::ofstream(path, std::ios::binary) << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
  void rewrite(const std::string& content) {
    std::ofstream(path, std::ios::binary | std::ios::trunc) << content;
  }
};

}  // namespace

TEST_CASE("host measurements land in the list and the register") {
  SimulatedHost host;
  std::string content = "object-a";
  REQUIRE(host.measure_content("/a", view(content)));
  auto snapshot = host.snapshot();
  REQUIRE(snapshot.list.size() == 1);
  CHECK(snapshot.list.entries()[0].file_digest == sha256(view(content)));
  CHECK(measurement::replay(snapshot.list) == snapshot.bank.value(host.measurement_pcr()));

  auto quote = host.quote(nonce_of(1), {static_cast<uint8_t>(host.measurement_pcr())});
  REQUIRE(quote);
  CHECK(rot::verify_quote(*quote, nonce_of(1), view(host.identity().public_key_raw())));
  CHECK(quote->pcr_composite == sha256(view(measurement::replay(snapshot.list))));
}

TEST_CASE("refresh re-measures files whose content changed") {
  TempFile file("version-1");
  SimulatedHost host;
  REQUIRE(host.measure_file(file.path));
  CHECK(host.snapshot().list.size() == 1);

  host.refresh();  // unchanged: no new entry
  CHECK(host.snapshot().list.size() == 1);

  file.rewrite("version-2");
  host.refresh();
  auto snapshot = host.snapshot();
  REQUIRE(snapshot.list.size() == 2);
  CHECK(snapshot.list.entries()[1].file_digest == sha256(view(std::string("version-2"))));
  // The register follows: replay of the two-entry list matches.
  CHECK(measurement::replay(snapshot.list) == snapshot.bank.value(host.measurement_pcr()));
}

TEST_CASE("unlogged extension desynchronizes register and list") {
  SimulatedHost host;
  std::string content = "object";
  REQUIRE(host.measure_content("/a", view(content)));
  Digest32 rogue{};
  rogue[0] = 0xaa;
  REQUIRE(host.extend_unlogged(host.measurement_pcr(), rogue));
  auto snapshot = host.snapshot();
  CHECK(snapshot.list.size() == 1);  // no list entry
  CHECK(measurement::replay(snapshot.list) != snapshot.bank.value(host.measurement_pcr()));
  CHECK(!host.extend_unlogged(99, rogue));
}

TEST_CASE("agent serves evidence that verifies end to end") {
  SimulatedHost host;
  std::string content = "measured";
  REQUIRE(host.measure_content("/bin/sw", view(content)));
  AttestationAgent agent(host, AgentConfig{});
  REQUIRE(agent.start());
  CHECK(agent.endpoint().port != 0);

  AgentClient client(agent.endpoint());
  auto evidence = client.request_evidence(nonce_of(0x5e));
  REQUIRE(evidence);

  auto quote = rot::Quote::decode(view(evidence->quote_bytes));
  REQUIRE(quote);
  CHECK(rot::verify_quote(*quote, nonce_of(0x5e), view(host.identity().public_key_raw())));

  auto list = measurement::MeasurementList::parse(evidence->list_text);
  REQUIRE(list);
  CHECK(list->contains_path("/bin/sw"));
  CHECK(sha256(view(measurement::replay(*list))) == quote->pcr_composite);

  // Distinct nonces yield distinct signatures over live state.
  auto evidence2 = client.request_evidence(nonce_of(0x5f));
  REQUIRE(evidence2);
  CHECK(evidence2->quote_bytes != evidence->quote_bytes);
  agent.stop();
}

TEST_CASE("agent refuses to bind off loopback") {
  SimulatedHost host;
  AgentConfig config;
  config.bound_endpoint = {"0.0.0.0", 0};
  AttestationAgent agent(host, config);
  CHECK(!agent.start());
}

TEST_CASE("agent rejects malformed requests with error frames") {
  SimulatedHost host;
  AttestationAgent agent(host, AgentConfig{});
  REQUIRE(agent.start());

  SUBCASE("unknown magic") {
    auto stream = net::TcpStream::connect(agent.endpoint());
    REQUIRE(stream);
    Bytes bad{0x7f};
    bad.resize(33, 0x00);
    REQUIRE(stream->write_all(view(bad)));
    stream->shutdown_write();
    Bytes response;
    REQUIRE(stream->read_to_eof(response));
    REQUIRE(response.size() == 2);
    CHECK(response[0] == kMsgError);
    CHECK(response[1] == kErrBadRequest);
  }
  SUBCASE("truncated nonce") {
    auto stream = net::TcpStream::connect(agent.endpoint());
    REQUIRE(stream);
    Bytes bad{kMsgQuoteRequest, 0x01, 0x02};
    REQUIRE(stream->write_all(view(bad)));
    stream->shutdown_write();
    Bytes response;
    REQUIRE(stream->read_to_eof(response));
    REQUIRE(response.size() == 2);
    CHECK(response[0] == kMsgError);
    CHECK(response[1] == kErrShortNonce);
  }
  agent.stop();
}

TEST_CASE("evidence reflects measurements taken after startup") {
  SimulatedHost host;
  std::string first = "first";
  REQUIRE(host.measure_content("/one", view(first)));
  AttestationAgent agent(host, AgentConfig{});
  REQUIRE(agent.start());
  AgentClient client(agent.endpoint());

  auto before = client.request_evidence(nonce_of(1));
  REQUIRE(before);
  std::string second = "second";
  REQUIRE(host.measure_content("/two", view(second)));
  auto after = client.request_evidence(nonce_of(2));
  REQUIRE(after);

  auto list_before = measurement::MeasurementList::parse(before->list_text);
  auto list_after = measurement::MeasurementList::parse(after->list_text);
  REQUIRE(list_before);
  REQUIRE(list_after);
  CHECK(list_before->size() + 1 == list_after->size());
  CHECK(list_after->contains_path("/two"));
  agent.stop();
}

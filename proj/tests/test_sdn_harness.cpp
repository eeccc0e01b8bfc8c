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
using namespace trustplane::harness;

TEST_CASE("packet queue delivers in order and times out when empty") {
  PacketQueue queue;
  CHECK(!queue.pop(0));
  queue.push({1});
  queue.push({2});
  CHECK(queue.depth() == 2);
  CHECK(queue.pop(0) == Bytes{1});
  CHECK(queue.pop(100) == Bytes{2});
  auto t0 = std::chrono::steady_clock::now();
  CHECK(!queue.pop(30));
  CHECK(std::chrono::steady_clock::now() - t0 >= std::chrono::milliseconds(25));
}

TEST_CASE("linked ports are cross-connected") {
  auto [a, b] = make_link();
  CHECK(a.connected());
  a.send({9, 9});
  CHECK(b.recv(100) == Bytes{9, 9});
  b.send({7});
  CHECK(a.recv(100) == Bytes{7});
  CHECK(!SimPort{}.connected());
}

TEST_CASE("controller logic learns sources and floods unknown destinations") {
  std::map<openflow::MacAddr, uint16_t> table;
  openflow::MacAddr host_a{0x02, 0, 0, 0, 0, 1};
  openflow::MacAddr host_b{0x02, 0, 0, 0, 0, 2};

  auto frame_between = [](openflow::MacAddr dst, openflow::MacAddr src) {
    openflow::UdpFrameSpec spec;
    spec.dst_mac = dst;
    spec.src_mac = src;
    spec.payload = {1, 2, 3, 4};
    return openflow::build_udp_frame(spec);
  };
  auto packet_in = [](Bytes frame, uint16_t in_port, uint32_t xid) {
    openflow::PacketIn msg;
    msg.xid = xid;
    msg.in_port = in_port;
    msg.total_len = static_cast<uint16_t>(frame.size());
    msg.payload = std::move(frame);
    return msg;
  };

  // a -> b with b unknown: learn a, flood.
  auto first = handle_packet_in(packet_in(frame_between(host_b, host_a), 1, 10), table);
  CHECK(first.learned);
  CHECK(first.flooded);
  REQUIRE(first.reply);
  CHECK(first.reply->out_port == openflow::kPortFlood);
  CHECK(first.reply->in_port == 1);
  CHECK(first.reply->xid == 10);
  CHECK(table[host_a] == 1);

  // b -> a with a known: learn b, unicast to port 1.
  auto second = handle_packet_in(packet_in(frame_between(host_a, host_b), 2, 11), table);
  CHECK(!second.flooded);
  REQUIRE(second.reply);
  CHECK(second.reply->out_port == 1);
  CHECK(table[host_b] == 2);

  // a -> b again: now unicast to port 2.
  auto third = handle_packet_in(packet_in(frame_between(host_b, host_a), 1, 12), table);
  CHECK(!third.flooded);
  REQUIRE(third.reply);
  CHECK(third.reply->out_port == 2);

  // Broadcast destination always floods.
  openflow::MacAddr bcast;
  bcast.fill(0xff);
  auto bc = handle_packet_in(packet_in(frame_between(bcast, host_a), 1, 13), table);
  CHECK(bc.flooded);

  // Learning migrates when a host moves ports.
  auto moved = handle_packet_in(packet_in(frame_between(host_b, host_a), 3, 14), table);
  CHECK(moved.learned);
  CHECK(table[host_a] == 3);

  // Unparseable payload produces no reply.
  openflow::PacketIn junk;
  junk.payload = {1, 2, 3};
  junk.total_len = 3;
  auto dropped = handle_packet_in(junk, table);
  CHECK(!dropped.reply);
  CHECK(!dropped.learned);
}

TEST_CASE("traffic spec validation") {
  auto link = make_link();
  TrafficSpec spec;
  spec.frame_size = kMinStampedFrame - 1;
  CHECK(!run_traffic(link.first, spec));
  spec.frame_size = 64;
  spec.count = 0;
  CHECK(!run_traffic(link.first, spec));
  SimPort disconnected;
  CHECK(!run_traffic(disconnected, TrafficSpec{}));
}

TEST_CASE("latency summary splits by size and applies the cutoff") {
  std::vector<LatencySample> samples;
  auto add = [&](size_t size, double rtt_us) {
    samples.push_back({size, rtt_us, 0, {}});
  };
  add(64, 100);
  add(64, 120);
  add(64, 9000);  // beyond a 2.5 ms cutoff
  add(128, 200);
  add(128, 240);

  auto report = summarize_latency(samples, 2.5);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].size_bytes == 64);
  CHECK(report.rows[0].summary.count == 2);
  CHECK(report.rows[0].excluded == 1);
  CHECK(report.rows[0].summary.mean == doctest::Approx(110));
  CHECK(report.rows[1].excluded == 0);
  REQUIRE(report.regression);
  CHECK(report.regression->slope == doctest::Approx((220.0 - 110.0) / 64.0));

  std::string text = report.render();
  CHECK(text.find("size_bytes mean_us variance q1_us median_us q3_us excluded_count") !=
        std::string::npos);
  CHECK(text.find("intercept_us slope_ns_per_byte residual_us") != std::string::npos);
}

TEST_CASE("report renderers emit the fixed labels") {
  std::string keygen = render_keygen_report({0.3, 0.31, 0.36, 0.4});
  for (const char* label : {"Mean", "Variance", "1st Quartile", "Median", "3rd Quartile"})
    CHECK(keygen.find(label) != std::string::npos);

  AttestationStageSamples stages;
  stages.tpm_quote_s = {0.1, 0.12};
  stages.key_generation_s = {0.3, 0.4};
  stages.csr_signing_s = {0.01, 0.02};
  stages.total_s = {0.45, 0.5};
  std::string attest = render_attestation_report(stages);
  for (const char* label : {"TPM quote", "Key generation", "CSR signing", "Total"})
    CHECK(attest.find(label) != std::string::npos);

  std::vector<compartment::TraceRecord> window{
      {"ecall_ssl_write", std::chrono::nanoseconds(2'000'000)},
      {"ecall_ssl_write", std::chrono::nanoseconds(4'000'000)},
      {"ecall_ssl_read", std::chrono::nanoseconds(1'000'000)},
      {"ecall_ssl_get_state", std::chrono::nanoseconds(10'000)},
      {"ecall_ssl_get_error", std::chrono::nanoseconds(20'000)},
      {"other_op", std::chrono::nanoseconds(50'000'000)},  // ignored
  };
  EcallRow row = summarize_trace_window(window, 256, 2);
  CHECK(row.write_ms == doctest::Approx(3.0));
  CHECK(row.read_ms == doctest::Approx(1.0));
  CHECK(row.get_state_ms == doctest::Approx(0.01));
  CHECK(row.get_error_ms == doctest::Approx(0.02));
  CHECK(row.total_ms == doctest::Approx((2 + 4 + 1 + 0.01 + 0.02) / 2.0));
  std::string table = render_ecall_report({row});
  CHECK(table.find("ecall_ssl_read_ms ecall_ssl_write_ms ecall_ssl_get_state_ms "
                   "ecall_ssl_get_error_ms total_enclave_access_ms") != std::string::npos);
  CHECK(table.find("\n256 ") != std::string::npos);
}

TEST_CASE("full deployment forwards traffic with zero loss") {
  Testbed testbed;
  std::string error;
  REQUIRE_MESSAGE(testbed.start_services(&error), error);
  auto session = testbed.enroll();
  REQUIRE_MESSAGE(session.state == enroll::SessionState::ENROLLED, session.failure_detail);
  CHECK(session.timings.total.count() > 0);
  CHECK(session.timings.key_generation.count() > 0);
  REQUIRE_MESSAGE(testbed.start_dataplane(&error), error);

  TrafficSpec spec;
  spec.frame_size = 128;
  spec.rate_pps = 400;
  spec.count = 40;
  auto result = testbed.run_traffic(spec);
  REQUIRE(result);
  CHECK(result->sent == 40);
  CHECK(result->received == 40);
  CHECK(result->payload_mismatches == 0);
  REQUIRE(result->samples.size() == 40);
  for (const auto& sample : result->samples) {
    CHECK(sample.packet_size == 128);
    CHECK(sample.rtt_us > 0);
  }

  auto switch_stats = testbed.vswitch().stats();
  CHECK(switch_stats.flow_mods_received == 0);
  CHECK(switch_stats.packet_ins_sent >= 80);  // both directions
  CHECK(switch_stats.malformed == 0);
  auto controller_stats = testbed.controller().stats();
  CHECK(controller_stats.packet_ins == controller_stats.packet_outs);
  CHECK(controller_stats.flow_mods == 0);
  CHECK(controller_stats.unicasts > controller_stats.floods);
  CHECK(testbed.controller().mac_table().size() == 2);
  CHECK(testbed.echo().echoed() == 40);
}

TEST_CASE("oversize frames cross the deployment fragmented") {
  Testbed testbed;
  std::string error;
  REQUIRE_MESSAGE(testbed.start_services(&error), error);
  REQUIRE(testbed.enroll().state == enroll::SessionState::ENROLLED);
  REQUIRE_MESSAGE(testbed.start_dataplane(&error), error);

  TrafficSpec spec;
  spec.frame_size = 1600;  // over the 1500-byte MTU
  spec.rate_pps = 200;
  spec.count = 10;
  auto result = testbed.run_traffic(spec);
  REQUIRE(result);
  CHECK(result->sent == 10);
  CHECK(result->received == 10);
  CHECK(result->payload_mismatches == 0);
  for (const auto& sample : result->samples) CHECK(sample.packet_size == 1600);
  // Each outbound frame split into two packet-in messages.
  CHECK(testbed.vswitch().stats().fragments_created >= 20);
}

TEST_CASE("failed enrollment leaves no usable dataplane") {
  Testbed testbed;
  REQUIRE(testbed.start_services());
  enroll::FaultPlan faults;
  faults.flip_quote_sig = true;
  auto session = testbed.enroll(faults);
  CHECK(session.state == enroll::SessionState::FAILED);
  CHECK(session.failure_reason == ca::RejectReason::QUOTE_SIG);
  CHECK(!testbed.comp().initialized());
  std::string error;
  CHECK(!testbed.start_dataplane(&error));
  CHECK(!error.empty());

  // The same testbed recovers after a clean retry.
  auto retry = testbed.enroll();
  CHECK(retry.state == enroll::SessionState::ENROLLED);
  CHECK(testbed.start_dataplane(&error));
}

TEST_CASE("tampered platforms fail enrollment with the matching reason") {
  SUBCASE("unlogged extension") {
    Testbed::Options options;
    options.tamper_extra_extend = true;
    Testbed testbed{std::move(options)};
    REQUIRE(testbed.start_services());
    auto session = testbed.enroll();
    CHECK(session.state == enroll::SessionState::FAILED);
    CHECK(session.failure_reason == ca::RejectReason::PCR_MISMATCH);
  }
  SUBCASE("unknown measurement") {
    Testbed::Options options;
    options.tamper_unknown_measurement = true;
    Testbed testbed{std::move(options)};
    REQUIRE(testbed.start_services());
    CHECK(testbed.enroll().failure_reason == ca::RejectReason::UNKNOWN_MEASUREMENT);
  }
  SUBCASE("missing required object") {
    Testbed::Options options;
    options.tamper_skip_required = true;
    Testbed testbed{std::move(options)};
    REQUIRE(testbed.start_services());
    CHECK(testbed.enroll().failure_reason == ca::RejectReason::MISSING_REQUIRED);
  }
}

TEST_CASE("stage timing map carries the expected keys") {
  Testbed testbed;
  REQUIRE(testbed.start_services());
  auto session = testbed.enroll();
  REQUIRE(session.state == enroll::SessionState::ENROLLED);
  auto timings = enroll::stage_timings(session);
  REQUIRE(timings);
  for (const char* key : {"nonce", "tpm_quote", "key_generation", "csr_signing", "total"})
    CHECK(timings->count(key) == 1);
  CHECK((*timings)["total"].count() >=
        (*timings)["tpm_quote"].count() + (*timings)["key_generation"].count() +
            (*timings)["csr_signing"].count());

  enroll::EnrollmentSession unfinished;
  CHECK(!enroll::stage_timings(unfinished));
}

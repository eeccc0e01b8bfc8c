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

#include "trustplane/bench.hpp"

namespace trustplane::bench {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::optional<BenchReports> run_benchmarks(const BenchConfig& config, std::string* error) {
  auto fail = [error](std::string message) {
    if (error) *error = std::move(message);
    return std::nullopt;
  };
  if (config.sizes.empty()) return fail("no frame sizes configured");
  auto wall_start = std::chrono::steady_clock::now();

  harness::Testbed::Options options;
  options.comp.trace_ecalls = config.trace_ecalls;
  options.identity_seed = config.identity_seed;
  options.root_seed = config.root_seed;
  if (!config.measured.empty()) options.measured = config.measured;
  harness::Testbed testbed(std::move(options));

  std::string detail;
  if (!testbed.start_services(&detail)) return fail("services: " + detail);
  auto session = testbed.enroll();
  if (session.state != enroll::SessionState::ENROLLED)
    return fail("enrollment failed: " + session.failure_detail);
  if (!testbed.start_dataplane(&detail)) return fail("dataplane: " + detail);

  BenchReports reports;
  std::vector<harness::LatencySample> all_samples;
  std::vector<harness::EcallRow> ecall_rows;
  auto southbound = testbed.vswitch().southbound();

  for (size_t size : config.sizes) {
    size_t trace_start =
        config.trace_ecalls ? testbed.comp().boundary_trace(southbound).size() : 0;
    harness::TrafficSpec spec;
    spec.frame_size = size;
    spec.rate_pps = config.rate_pps;
    spec.count = config.count;
    spec.drain_timeout_ms = 5000;  // a loaded box flushes its backlog slowly
    auto result = testbed.run_traffic(spec);
    if (!result) return fail("traffic run rejected for size " + std::to_string(size));
    if (result->received == 0)
      return fail("no echo traffic returned at size " + std::to_string(size));
    reports.packets_sent += result->sent;
    reports.packets_received += result->received;
    all_samples.insert(all_samples.end(), result->samples.begin(), result->samples.end());
    if (config.trace_ecalls) {
      auto trace = testbed.comp().boundary_trace(southbound);
      std::vector<compartment::TraceRecord> window(trace.begin() + trace_start, trace.end());
      ecall_rows.push_back(harness::summarize_trace_window(window, size, result->sent));
    }
  }
  reports.latency = harness::summarize_latency(all_samples, config.cutoff_ms);
  reports.latency_text = reports.latency.render();
  if (config.trace_ecalls) reports.ecall_text = harness::render_ecall_report(ecall_rows);

  // Key generation inside a scratch compartment, one fresh compartment per
  // iteration so every sample pays the same path.
  std::vector<double> keygen_seconds;
  keygen_seconds.reserve(config.keygen_iters);
  for (int i = 0; i < config.keygen_iters; ++i) {
    compartment::TlsCompartment scratch;
    auto t0 = std::chrono::steady_clock::now();
    if (!scratch.enroll_generate_key()) return fail("key generation failed");
    keygen_seconds.push_back(seconds_since(t0));
    scratch.discard_enrollment();
  }
  reports.keygen_text = harness::render_keygen_report(keygen_seconds);
  reports.keygen_seconds = std::move(keygen_seconds);

  // Stage timings over repeated full enrollments of fresh compartments.
  harness::AttestationStageSamples stages;
  for (int i = 0; i < config.attest_iters; ++i) {
    compartment::TlsCompartment fresh;
    auto attempt = enroll::run_enrollment(testbed.ca_endpoint(), testbed.agent_endpoint(), fresh);
    if (attempt.state != enroll::SessionState::ENROLLED)
      return fail("benchmark enrollment failed: " + attempt.failure_detail);
    auto to_s = [](std::chrono::microseconds us) { return us.count() / 1e6; };
    stages.tpm_quote_s.push_back(to_s(attempt.timings.tpm_quote));
    stages.key_generation_s.push_back(to_s(attempt.timings.key_generation));
    stages.csr_signing_s.push_back(to_s(attempt.timings.csr_signing));
    stages.total_s.push_back(to_s(attempt.timings.total));
  }
  reports.attestation_text = harness::render_attestation_report(stages);
  reports.attest_stages = std::move(stages);

  reports.wall_seconds = seconds_since(wall_start);
  return reports;
}

}  // namespace trustplane::bench

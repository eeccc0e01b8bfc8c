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

#include "trustplane/sdn_harness.hpp"

namespace trustplane::bench {

struct BenchConfig {
  std::vector<size_t> sizes;  // frame sizes for the latency sweep
  int rate_pps = 500;
  int count = 200;  // packets per size
  double cutoff_ms = 2.5;
  int keygen_iters = 50;
  int attest_iters = 20;
  bool trace_ecalls = false;
  std::optional<Bytes> identity_seed;
  std::optional<Bytes> root_seed;
  // Optional override of the default measured objects.
  std::vector<std::pair<std::string, std::string>> measured;
};

struct BenchReports {
  harness::LatencyReport latency;
  std::string latency_text;
  std::string keygen_text;
  std::string attestation_text;
  std::string ecall_text;  // empty unless trace_ecalls
  std::vector<double> keygen_seconds;
  harness::AttestationStageSamples attest_stages;
  uint64_t packets_sent = 0;
  uint64_t packets_received = 0;
  double wall_seconds = 0;
};

/// Runs the full desk-scale benchmark suite on a fresh in-process
/// deployment: the latency sweep through the enclave-backed switch, key
/// generation inside the compartment, and repeated enrollment for the
/// per-stage attestation table.
std::optional<BenchReports> run_benchmarks(const BenchConfig& config, std::string* error);

}  // namespace trustplane::bench

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

#include <map>
#include <mutex>
#include <thread>

#include "trustplane/measurement_log.hpp"
#include "trustplane/net.hpp"
#include "trustplane/root_of_trust.hpp"

namespace trustplane::agent {

/// Simulated measured host: a register bank, an append-only measurement list,
/// and a root-of-trust signing identity. Stands in for TPM + kernel
/// measurement on a real machine.
class SimulatedHost {
 public:
  struct Options {
    std::optional<Bytes> identity_seed;  // 32 bytes for a deterministic identity
    int measurement_pcr = measurement::kDefaultMeasurementPcr;
  };
  SimulatedHost();
  explicit SimulatedHost(Options options);

  // Measures a disk file and tracks it for re-measurement.
  bool measure_file(const std::string& path);
  // Measures in-memory content under a synthetic path.
  bool measure_content(const std::string& path, ByteView content);

  // Re-reads tracked files; content changes append fresh entries, as a
  // measured-launch kernel would on re-execution of a modified binary.
  void refresh();

  struct Snapshot {
    measurement::PcrBank bank;
    measurement::MeasurementList list;
  };
  Snapshot snapshot() const;

  const rot::AttestationIdentity& identity() const { return identity_; }
  int measurement_pcr() const { return measurement_pcr_; }

  std::optional<rot::Quote> quote(const Nonce32& nonce,
                                  const std::vector<uint8_t>& selection) const;

  // Extends a register without logging a list entry — models firmware
  // activity outside the measurement list (used for fault injection).
  bool extend_unlogged(int pcr_index, const Digest32& digest);

 private:
  mutable std::mutex mu_;
  measurement::PcrBank bank_;
  measurement::MeasurementList list_;
  rot::AttestationIdentity identity_;
  int measurement_pcr_;
  std::map<std::string, Digest32> tracked_files_;  // path -> last file digest
};

// Protocol bytes. One request per connection.
inline constexpr uint8_t kMsgQuoteRequest = 0x01;
inline constexpr uint8_t kMsgQuoteResponse = 0x01;
inline constexpr uint8_t kMsgError = 0xFF;
inline constexpr uint8_t kErrBadRequest = 0x01;   // unknown leading byte
inline constexpr uint8_t kErrShortNonce = 0x02;   // fewer than 32 nonce bytes
inline constexpr uint8_t kErrQuoteFailed = 0x03;  // root of trust refused

struct AgentConfig {
  std::string host_id = "host-0";
  net::Endpoint bound_endpoint{"127.0.0.1", 0};
  std::vector<uint8_t> pcr_selection{measurement::kDefaultMeasurementPcr};
};

/// Local-only attestation broker. Binds exclusively to a loopback address and
/// drops any connection whose peer is non-local, so a remote attacker cannot
/// relay another machine's attestation through it. It holds no CA endpoint
/// and opens no outbound connections.
class AttestationAgent {
 public:
  AttestationAgent(SimulatedHost& host, AgentConfig config);
  ~AttestationAgent();

  // Fails when the configured endpoint is not loopback or cannot be bound.
  bool start();
  void stop();
  net::Endpoint endpoint() const;

  const AgentConfig& config() const { return config_; }
  uint64_t refused_connections() const { return refused_; }

 private:
  void serve();
  void handle(net::TcpStream stream);

  SimulatedHost& host_;
  AgentConfig config_;
  net::TcpListener listener_;
  std::atomic<bool> stop_{false};
  std::atomic<uint64_t> refused_{0};
  std::thread thread_;
};

/// Client side of the agent protocol.
class AgentClient {
 public:
  explicit AgentClient(net::Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

  struct Evidence {
    Bytes quote_bytes;      // encoded quote, forwarded verbatim to the CA
    std::string list_text;  // serialized measurement list
  };
  std::optional<Evidence> request_evidence(const Nonce32& nonce);

 private:
  net::Endpoint endpoint_;
};

}  // namespace trustplane::agent

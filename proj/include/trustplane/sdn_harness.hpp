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

#include <condition_variable>
#include <deque>
#include <thread>

#include "trustplane/attestation_agent.hpp"
#include "trustplane/enclave_tls.hpp"
#include "trustplane/enrollment.hpp"
#include "trustplane/extended_ca.hpp"
#include "trustplane/openflow.hpp"
#include "trustplane/stats.hpp"

typedef struct ssl_ctx_st SSL_CTX;

namespace trustplane::harness {

/// Unbounded thread-safe frame queue.
class PacketQueue {
 public:
  void push(Bytes frame);
  // timeout_ms == 0 is a non-blocking try.
  std::optional<Bytes> pop(int timeout_ms);
  size_t depth() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Bytes> frames_;
};

/// One endpoint of a bidirectional in-process link; the stand-in for a veth
/// pair between namespaces.
class SimPort {
 public:
  SimPort() = default;
  bool connected() const { return tx_ != nullptr; }
  void send(Bytes frame) { tx_->push(std::move(frame)); }
  std::optional<Bytes> recv(int timeout_ms) { return rx_->pop(timeout_ms); }
  size_t pending() const { return rx_->depth(); }

 private:
  friend std::pair<SimPort, SimPort> make_link();
  std::shared_ptr<PacketQueue> tx_, rx_;
};
std::pair<SimPort, SimPort> make_link();

struct LatencySample {
  size_t packet_size = 0;  // frame bytes, Ethernet and IP headers included
  double rtt_us = 0;
  uint32_t sequence = 0;
  std::chrono::steady_clock::time_point timestamp{};
};

// --- learning L2 controller (standard TLS stack, server role) ---

struct ControllerStats {
  uint64_t packet_ins = 0;
  uint64_t packet_outs = 0;
  uint64_t flow_mods = 0;  // never incremented; the controller installs no flows
  uint64_t malformed = 0;
  uint64_t floods = 0;
  uint64_t unicasts = 0;
  uint64_t handshakes_ok = 0;
  uint64_t handshakes_failed = 0;
};

struct ControllerDecision {
  std::optional<openflow::PacketOut> reply;  // unset => dropped as malformed
  bool learned = false;
  bool flooded = false;
};

/// Pure forwarding logic: learn source MAC -> in_port, emit Packet-Out to
/// the learned destination port or flood. Never emits a flow modification.
ControllerDecision handle_packet_in(const openflow::PacketIn& msg,
                                    std::map<openflow::MacAddr, uint16_t>& table);

class LearningController {
 public:
  struct Options {
    net::Endpoint listen{"127.0.0.1", 0};
    Bytes certificate_der;
    Bytes ca_root_der;
  };
  LearningController(pki::KeyPtr key, Options options);
  ~LearningController();

  bool start();
  void stop();
  net::Endpoint endpoint() const;

  ControllerStats stats() const;
  std::map<openflow::MacAddr, uint16_t> mac_table() const;

 private:
  void serve();
  void serve_session(net::TcpStream stream);

  pki::KeyPtr key_;
  Options options_;
  SSL_CTX* ssl_ctx_ = nullptr;
  net::TcpListener listener_;
  std::atomic<bool> stop_{false};
  std::thread thread_;

  mutable std::mutex mu_;
  ControllerStats stats_;
  std::map<openflow::MacAddr, uint16_t> table_;
};

// --- virtual switch (southbound through the compartment) ---

struct SwitchStats {
  uint64_t frames_in = 0;
  uint64_t packet_ins_sent = 0;
  uint64_t packet_outs_received = 0;
  uint64_t flow_mods_received = 0;
  uint64_t frames_out = 0;
  uint64_t fragments_created = 0;
  uint64_t dropped = 0;
  uint64_t malformed = 0;
};

class VirtualSwitch {
 public:
  explicit VirtualSwitch(compartment::TlsCompartment& comp) : comp_(comp) {}
  ~VirtualSwitch();

  void attach_port(uint16_t port_no, SimPort port);
  // Establishes the southbound TLS session; requires an enrolled compartment.
  bool connect_southbound(const net::Endpoint& controller);
  bool start();
  void stop();

  SwitchStats stats() const;
  compartment::TlsContextHandle southbound() const { return handle_; }
  bool southbound_established() const;

 private:
  void loop();
  void ingress(const Bytes& frame, uint16_t port_no);
  bool send_message(const Bytes& message);
  bool pump_southbound(int wait_ms);
  void deliver(const openflow::PacketOut& msg);

  compartment::TlsCompartment& comp_;
  compartment::TlsContextHandle handle_{};
  std::map<uint16_t, SimPort> ports_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
  uint32_t next_xid_ = 1;
  Bytes southbound_buf_;

  mutable std::mutex mu_;
  SwitchStats stats_;
};

// --- echo host ---

class EchoHost {
 public:
  explicit EchoHost(SimPort port) : port_(std::move(port)) {}
  ~EchoHost();
  void start();
  void stop();
  uint64_t echoed() const { return echoed_; }

 private:
  void loop();
  SimPort port_;
  openflow::Ipv4Reassembler reassembler_;
  std::atomic<bool> stop_{false};
  std::atomic<uint64_t> echoed_{0};
  std::thread thread_;
};

// --- traffic generator + sink (one host, one clock) ---

struct TrafficSpec {
  size_t frame_size = 64;  // on-wire bytes incl. Ethernet+IP+UDP headers
  int rate_pps = 500;
  int count = 100;
  int drain_timeout_ms = 1000;  // wait for stragglers after the last send
  openflow::MacAddr src_mac{0x02, 0, 0, 0, 0, 0x01};
  openflow::MacAddr dst_mac{0x02, 0, 0, 0, 0, 0x02};
  uint32_t src_ip = 0x0a000001;  // 10.0.0.1
  uint32_t dst_ip = 0x0a000002;  // 10.0.0.2
  uint16_t src_port = 40000;
  uint16_t dst_port = 7;
};

struct TrafficResult {
  std::vector<LatencySample> samples;
  uint64_t sent = 0;
  uint64_t received = 0;
  uint64_t payload_mismatches = 0;
  std::chrono::microseconds elapsed{0};
};

/// Minimum frame able to carry the sequence + timestamp stamp.
inline constexpr size_t kMinStampedFrame = openflow::kFrameOverhead + 12;

/// Paced sender and matching sink sharing one clock. Returns nullopt when
/// the spec is unusable (frame too small for the stamp).
std::optional<TrafficResult> run_traffic(SimPort& port, const TrafficSpec& spec);

// --- summaries / reports ---

struct SizeRow {
  size_t size_bytes = 0;
  stats::Summary summary;  // over samples that survived the cutoff
  uint64_t excluded = 0;
};

struct LatencyReport {
  std::vector<SizeRow> rows;
  std::optional<stats::Regression> regression;  // mean rtt (µs) vs frame bytes
  std::string render() const;
};

/// Applies the outlier cutoff per size class and fits the size/latency line
/// over per-size means.
LatencyReport summarize_latency(const std::vector<LatencySample>& samples, double cutoff_ms);

std::string render_keygen_report(const std::vector<double>& seconds);

struct AttestationStageSamples {
  std::vector<double> tpm_quote_s;
  std::vector<double> key_generation_s;
  std::vector<double> csr_signing_s;
  std::vector<double> total_s;
};
std::string render_attestation_report(const AttestationStageSamples& samples);

struct EcallRow {
  size_t size_bytes = 0;
  double read_ms = 0;
  double write_ms = 0;
  double get_state_ms = 0;
  double get_error_ms = 0;
  double total_ms = 0;  // enclave time per packet
};
std::string render_ecall_report(const std::vector<EcallRow>& rows);

/// Per-op means over a boundary-trace window, divided per packet.
EcallRow summarize_trace_window(const std::vector<compartment::TraceRecord>& window,
                                size_t size_bytes, uint64_t packets);

// --- full in-process deployment ---

/// Owns every actor of the desk-scale deployment: CA, measured host with its
/// agent, controller, enclave-backed switch, echo host, and the generator
/// port. Brings them up in dependency order on loopback ephemeral ports.
class Testbed {
 public:
  struct Options {
    compartment::CompartmentOptions comp;
    // Simulated measured objects (path -> content).
    std::vector<std::pair<std::string, std::string>> measured = {
        {"/opt/sdn/vswitchd", "vswitchd binary image v1"},
        {"/opt/sdn/switch.conf", "port-count=3 controller=tls"},
    };
    // Host-side faults, applied before enrollment.
    bool tamper_extra_extend = false;         // unlogged register extension
    bool tamper_skip_required = false;        // leave one required object unmeasured
    bool tamper_unknown_measurement = false;  // measure an object outside the allowlist
    std::optional<Bytes> identity_seed;       // deterministic host identity
    std::optional<Bytes> root_seed;           // deterministic CA root
  };

  Testbed();
  explicit Testbed(Options options);
  ~Testbed();

  bool start_services(std::string* error = nullptr);
  enroll::EnrollmentSession enroll(const enroll::FaultPlan& faults = {});
  bool start_dataplane(std::string* error = nullptr);
  std::optional<TrafficResult> run_traffic(const TrafficSpec& spec);

  ca::CertificateAuthority& ca() { return *ca_; }
  net::Endpoint ca_endpoint() const;
  net::Endpoint ca_admin_endpoint() const;
  net::Endpoint agent_endpoint() const;
  agent::SimulatedHost& host() { return *host_; }
  compartment::TlsCompartment& comp() { return *comp_; }
  LearningController& controller() { return *controller_; }
  VirtualSwitch& vswitch() { return *switch_; }
  EchoHost& echo() { return *echo_; }

 private:
  Options options_;
  std::unique_ptr<ca::CertificateAuthority> ca_;
  std::unique_ptr<ca::CaServer> ca_server_;
  std::unique_ptr<agent::SimulatedHost> host_;
  std::unique_ptr<agent::AttestationAgent> agent_;
  std::unique_ptr<LearningController> controller_;
  std::unique_ptr<compartment::TlsCompartment> comp_;
  std::unique_ptr<VirtualSwitch> switch_;
  std::unique_ptr<EchoHost> echo_;
  SimPort generator_port_;
};

}  // namespace trustplane::harness

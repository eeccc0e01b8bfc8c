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

#include "trustplane/sdn_harness.hpp"

#include <openssl/err.h>
#include <openssl/ssl.h>
#include <sys/socket.h>

#include <cstdio>
#include <sstream>

#include "trustplane/digest.hpp"

namespace trustplane::harness {
namespace {

using Clock = std::chrono::steady_clock;

uint64_t monotonic_ns() {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now().time_since_epoch())
          .count());
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

// --- queues and ports ---

void PacketQueue::push(Bytes frame) {
  {
    std::lock_guard lock(mu_);
    frames_.push_back(std::move(frame));
  }
  cv_.notify_one();
}

std::optional<Bytes> PacketQueue::pop(int timeout_ms) {
  std::unique_lock lock(mu_);
  if (frames_.empty()) {
    if (timeout_ms <= 0) return std::nullopt;
    cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms), [this] { return !frames_.empty(); });
    if (frames_.empty()) return std::nullopt;
  }
  Bytes frame = std::move(frames_.front());
  frames_.pop_front();
  return frame;
}

size_t PacketQueue::depth() const {
  std::lock_guard lock(mu_);
  return frames_.size();
}

std::pair<SimPort, SimPort> make_link() {
  auto ab = std::make_shared<PacketQueue>();
  auto ba = std::make_shared<PacketQueue>();
  SimPort a, b;
  a.tx_ = ab;
  a.rx_ = ba;
  b.tx_ = ba;
  b.rx_ = ab;
  return {std::move(a), std::move(b)};
}

// --- controller ---

ControllerDecision handle_packet_in(const openflow::PacketIn& msg,
                                    std::map<openflow::MacAddr, uint16_t>& table) {
  ControllerDecision decision;
  auto src = openflow::frame_src_mac(view(msg.payload));
  auto dst = openflow::frame_dst_mac(view(msg.payload));
  if (!src || !dst) return decision;

  table[*src] = msg.in_port;
  decision.learned = true;

  openflow::PacketOut reply;
  reply.xid = msg.xid;
  reply.in_port = msg.in_port;
  reply.payload = msg.payload;
  openflow::MacAddr broadcast;
  broadcast.fill(0xff);
  auto it = table.find(*dst);
  if (*dst == broadcast || it == table.end()) {
    reply.out_port = openflow::kPortFlood;
    decision.flooded = true;
  } else {
    reply.out_port = it->second;
  }
  decision.reply = std::move(reply);
  return decision;
}

LearningController::LearningController(pki::KeyPtr key, Options options)
    : key_(std::move(key)), options_(std::move(options)) {}

LearningController::~LearningController() {
  stop();
  if (ssl_ctx_) SSL_CTX_free(ssl_ctx_);
}

bool LearningController::start() {
  const unsigned char* p = options_.certificate_der.data();
  X509* cert = d2i_X509(nullptr, &p, static_cast<long>(options_.certificate_der.size()));
  p = options_.ca_root_der.data();
  X509* root = d2i_X509(nullptr, &p, static_cast<long>(options_.ca_root_der.size()));

  SSL_CTX* ctx = SSL_CTX_new(TLS_server_method());
  bool ok = ctx && cert && root && key_ &&
            SSL_CTX_set_min_proto_version(ctx, TLS1_2_VERSION) == 1 &&
            SSL_CTX_set_max_proto_version(ctx, TLS1_2_VERSION) == 1 &&
            SSL_CTX_use_certificate(ctx, cert) == 1 &&
            SSL_CTX_use_PrivateKey(ctx, key_.get()) == 1 &&
            X509_STORE_add_cert(SSL_CTX_get_cert_store(ctx), root) == 1;
  if (cert) X509_free(cert);
  if (root) X509_free(root);
  if (!ok) {
    if (ctx) SSL_CTX_free(ctx);
    ERR_clear_error();
    return false;
  }
  // Mutual authentication: no client certificate, no session.
  SSL_CTX_set_verify(ctx, SSL_VERIFY_PEER | SSL_VERIFY_FAIL_IF_NO_PEER_CERT, nullptr);
  ssl_ctx_ = ctx;

  auto listener = net::TcpListener::bind(options_.listen);
  if (!listener) return false;
  listener_ = std::move(*listener);
  stop_ = false;
  thread_ = std::thread([this] { serve(); });
  return true;
}

void LearningController::stop() {
  stop_ = true;
  listener_.close();
  if (thread_.joinable()) thread_.join();
}

net::Endpoint LearningController::endpoint() const { return listener_.local_endpoint(); }

ControllerStats LearningController::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

std::map<openflow::MacAddr, uint16_t> LearningController::mac_table() const {
  std::lock_guard lock(mu_);
  return table_;
}

void LearningController::serve() {
  while (!stop_) {
    auto stream = listener_.accept(200);
    if (!stream) continue;
    serve_session(std::move(*stream));
  }
}

void LearningController::serve_session(net::TcpStream stream) {
  // Bounded socket reads keep the session loop responsive to stop().
  timeval tv{0, 200000};
  setsockopt(stream.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));

  SSL* ssl = SSL_new(ssl_ctx_);
  if (!ssl) return;
  SSL_set_fd(ssl, stream.fd());

  int r;
  while ((r = SSL_accept(ssl)) != 1) {
    int err = SSL_get_error(ssl, r);
    ERR_clear_error();
    if ((err == SSL_ERROR_WANT_READ || err == SSL_ERROR_WANT_WRITE) && !stop_) continue;
    {
      std::lock_guard lock(mu_);
      ++stats_.handshakes_failed;
    }
    SSL_free(ssl);
    return;
  }
  {
    std::lock_guard lock(mu_);
    ++stats_.handshakes_ok;
  }

  auto read_exact = [&](uint8_t* out, size_t len) {
    size_t off = 0;
    while (off < len) {
      size_t got = 0;
      int rr = SSL_read_ex(ssl, out + off, len - off, &got);
      if (rr == 1) {
        off += got;
        continue;
      }
      int err = SSL_get_error(ssl, rr);
      ERR_clear_error();
      if ((err == SSL_ERROR_WANT_READ || err == SSL_ERROR_WANT_WRITE) && !stop_) continue;
      return false;
    }
    return true;
  };

  for (;;) {
    uint8_t hdr[4];
    if (!read_exact(hdr, sizeof(hdr))) break;
    uint16_t len = read_u16be(hdr + 2);
    if (len < sizeof(hdr)) {
      std::lock_guard lock(mu_);
      ++stats_.malformed;
      break;  // framing is unrecoverable
    }
    Bytes msg(hdr, hdr + sizeof(hdr));
    msg.resize(len);
    if (len > sizeof(hdr) && !read_exact(msg.data() + sizeof(hdr), len - sizeof(hdr))) break;

    auto type = openflow::message_type(view(msg));
    auto packet_in = type && *type == openflow::kTypePacketIn
                         ? openflow::PacketIn::decode(view(msg))
                         : std::nullopt;
    if (!packet_in) {
      std::lock_guard lock(mu_);
      ++stats_.malformed;
      continue;
    }

    Bytes reply_bytes;
    {
      std::lock_guard lock(mu_);
      ++stats_.packet_ins;
      ControllerDecision decision = handle_packet_in(*packet_in, table_);
      if (!decision.reply) {
        ++stats_.malformed;
        continue;
      }
      decision.flooded ? ++stats_.floods : ++stats_.unicasts;
      ++stats_.packet_outs;
      reply_bytes = decision.reply->encode();
    }
    size_t written = 0;
    if (SSL_write_ex(ssl, reply_bytes.data(), reply_bytes.size(), &written) != 1) {
      ERR_clear_error();
      break;
    }
  }
  SSL_shutdown(ssl);
  SSL_free(ssl);
}

// --- virtual switch ---

VirtualSwitch::~VirtualSwitch() { stop(); }

void VirtualSwitch::attach_port(uint16_t port_no, SimPort port) {
  ports_[port_no] = std::move(port);
}

bool VirtualSwitch::connect_southbound(const net::Endpoint& controller) {
  auto stream = net::TcpStream::connect(controller, 5000);
  if (!stream) return false;
  handle_ = comp_.ssl_new_and_connect(std::move(*stream));
  return southbound_established();
}

bool VirtualSwitch::southbound_established() const {
  auto state = comp_.ssl_get_state(handle_);
  return state && *state == compartment::SslState::ESTABLISHED;
}

bool VirtualSwitch::start() {
  if (!southbound_established()) return false;
  stop_ = false;
  thread_ = std::thread([this] { loop(); });
  return true;
}

void VirtualSwitch::stop() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

SwitchStats VirtualSwitch::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

void VirtualSwitch::loop() {
  while (!stop_) {
    bool busy = false;
    for (auto& [port_no, port] : ports_) {
      while (auto frame = port.recv(0)) {
        busy = true;
        ingress(*frame, port_no);
      }
    }
    if (pump_southbound(busy ? 0 : 1)) busy = true;
  }
}

void VirtualSwitch::ingress(const Bytes& frame, uint16_t port_no) {
  {
    std::lock_guard lock(mu_);
    ++stats_.frames_in;
  }
  if (!southbound_established()) {
    std::lock_guard lock(mu_);
    ++stats_.dropped;
    return;
  }

  auto pieces = openflow::fragment_frame(view(frame), openflow::kMtu);
  if (pieces.empty()) {
    std::lock_guard lock(mu_);
    ++stats_.malformed;
    return;
  }
  if (pieces.size() > 1) {
    std::lock_guard lock(mu_);
    stats_.fragments_created += pieces.size();
  }

  for (auto& piece : pieces) {
    openflow::PacketIn msg;
    msg.xid = next_xid_++;
    msg.total_len = static_cast<uint16_t>(piece.size());
    msg.in_port = port_no;
    msg.payload = std::move(piece);
    bool sent = send_message(msg.encode());
    std::lock_guard lock(mu_);
    sent ? ++stats_.packet_ins_sent : ++stats_.dropped;
  }
}

bool VirtualSwitch::send_message(const Bytes& message) {
  // The reference trace brackets each data ECALL with state checks.
  comp_.ssl_get_state(handle_);
  int w = comp_.ssl_write(handle_, view(message));
  comp_.ssl_get_state(handle_);
  for (int retry = 0; w == compartment::kWouldBlock && retry < 2000 && !stop_; ++retry) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
    w = comp_.ssl_write(handle_, view(message));
  }
  return w == static_cast<int>(message.size());
}

bool VirtualSwitch::pump_southbound(int wait_ms) {
  comp_.ssl_get_state(handle_);
  auto [n, data] = comp_.ssl_read(handle_, 16384, wait_ms);
  if (n < 0) {
    comp_.ssl_get_error(handle_, n);  // WANT_READ: poll again next tick
    comp_.ssl_get_state(handle_);
    return false;
  }
  comp_.ssl_get_state(handle_);
  if (n == 0) return false;  // peer closed

  append(southbound_buf_, view(data));
  bool progressed = false;
  for (;;) {
    auto len = openflow::message_length(view(southbound_buf_));
    if (!len || southbound_buf_.size() < *len) break;
    if (*len < 4) {
      std::lock_guard lock(mu_);
      ++stats_.malformed;
      southbound_buf_.clear();
      break;
    }
    ByteView msg{southbound_buf_.data(), *len};
    auto type = openflow::message_type(msg);
    if (type && *type == openflow::kTypePacketOut) {
      if (auto packet_out = openflow::PacketOut::decode(msg)) {
        {
          std::lock_guard lock(mu_);
          ++stats_.packet_outs_received;
        }
        deliver(*packet_out);
      } else {
        std::lock_guard lock(mu_);
        ++stats_.malformed;
      }
    } else if (type && *type == openflow::kTypeFlowMod) {
      std::lock_guard lock(mu_);
      ++stats_.flow_mods_received;
    } else {
      std::lock_guard lock(mu_);
      ++stats_.malformed;
    }
    southbound_buf_.erase(southbound_buf_.begin(), southbound_buf_.begin() + *len);
    progressed = true;
  }
  return progressed;
}

void VirtualSwitch::deliver(const openflow::PacketOut& msg) {
  if (msg.out_port == openflow::kPortFlood) {
    for (auto& [port_no, port] : ports_) {
      if (port_no == msg.in_port) continue;
      port.send(msg.payload);
      std::lock_guard lock(mu_);
      ++stats_.frames_out;
    }
    return;
  }
  auto it = ports_.find(msg.out_port);
  if (it == ports_.end()) {
    std::lock_guard lock(mu_);
    ++stats_.dropped;
    return;
  }
  it->second.send(msg.payload);
  std::lock_guard lock(mu_);
  ++stats_.frames_out;
}

// --- echo host ---

EchoHost::~EchoHost() { stop(); }

void EchoHost::start() {
  stop_ = false;
  thread_ = std::thread([this] { loop(); });
}

void EchoHost::stop() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

void EchoHost::loop() {
  while (!stop_) {
    auto frame = port_.recv(5);
    if (!frame) continue;
    auto whole = reassembler_.push(view(*frame));
    if (!whole) continue;
    auto request = openflow::parse_udp_frame(view(*whole));
    if (!request) continue;

    openflow::UdpFrameSpec reply;
    reply.dst_mac = request->src_mac;
    reply.src_mac = request->dst_mac;
    reply.src_ip = request->dst_ip;
    reply.dst_ip = request->src_ip;
    reply.src_port = request->dst_port;
    reply.dst_port = request->src_port;
    reply.ip_id = request->ip_id;
    reply.payload = std::move(request->payload);  // byte-identical echo
    Bytes reply_frame = openflow::build_udp_frame(reply);
    for (auto& piece : openflow::fragment_frame(view(reply_frame), openflow::kMtu))
      port_.send(std::move(piece));
    ++echoed_;
  }
}

// --- traffic generator / sink ---

std::optional<TrafficResult> run_traffic(SimPort& port, const TrafficSpec& spec) {
  if (spec.frame_size < kMinStampedFrame || spec.count <= 0 || spec.rate_pps <= 0)
    return std::nullopt;
  if (!port.connected()) return std::nullopt;

  const size_t payload_len = spec.frame_size - openflow::kFrameOverhead;
  TrafficResult result;
  std::map<uint32_t, Bytes> outstanding;
  openflow::Ipv4Reassembler reassembler;

  auto process_frame = [&](const Bytes& frame) {
    auto whole = reassembler.push(view(frame));
    if (!whole) return;
    // Stragglers from an earlier run at another size must not consume this
    // run's sequence slots.
    if (whole->size() != spec.frame_size) return;
    auto udp = openflow::parse_udp_frame(view(*whole));
    if (!udp || udp->payload.size() < 12) return;
    uint32_t seq = read_u32be(udp->payload.data());
    uint64_t sent_ns = read_u64be(udp->payload.data() + 4);
    auto it = outstanding.find(seq);
    if (it == outstanding.end()) return;  // duplicate or foreign
    if (it->second != udp->payload) ++result.payload_mismatches;
    outstanding.erase(it);
    ++result.received;
    result.samples.push_back({whole->size(),
                              static_cast<double>(monotonic_ns() - sent_ns) / 1000.0, seq,
                              Clock::now()});
  };

  const auto interval = std::chrono::nanoseconds(1'000'000'000LL / spec.rate_pps);
  const auto t0 = Clock::now();
  auto next_send = t0;
  auto last_send = t0;
  uint32_t seq = 0;

  for (;;) {
    auto now = Clock::now();
    if (result.sent < static_cast<uint64_t>(spec.count) && now >= next_send) {
      Bytes payload;
      payload.reserve(payload_len);
      append_u32be(payload, seq);
      append_u64be(payload, monotonic_ns());
      for (size_t i = payload.size(); i < payload_len; ++i)
        payload.push_back(static_cast<uint8_t>(seq + i));

      openflow::UdpFrameSpec frame;
      frame.dst_mac = spec.dst_mac;
      frame.src_mac = spec.src_mac;
      frame.src_ip = spec.src_ip;
      frame.dst_ip = spec.dst_ip;
      frame.src_port = spec.src_port;
      frame.dst_port = spec.dst_port;
      frame.ip_id = static_cast<uint16_t>(seq);
      frame.payload = payload;
      port.send(openflow::build_udp_frame(frame));
      outstanding[seq] = std::move(payload);
      ++result.sent;
      ++seq;
      last_send = now;
      next_send += interval;
      continue;
    }

    if (result.sent >= static_cast<uint64_t>(spec.count)) {
      if (outstanding.empty()) break;
      if (now - last_send > std::chrono::milliseconds(spec.drain_timeout_ms)) break;
      if (auto frame = port.recv(5)) process_frame(*frame);
      continue;
    }

    auto gap = std::chrono::duration_cast<std::chrono::milliseconds>(next_send - now);
    if (auto frame = port.recv(gap.count() > 1 ? 1 : 0)) process_frame(*frame);
  }

  result.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0);
  return result;
}

// --- summaries ---

LatencyReport summarize_latency(const std::vector<LatencySample>& samples, double cutoff_ms) {
  std::map<size_t, std::vector<double>> kept;
  std::map<size_t, uint64_t> excluded;
  const double cutoff_us = cutoff_ms * 1000.0;
  for (const auto& sample : samples) {
    kept.try_emplace(sample.packet_size);
    excluded.try_emplace(sample.packet_size, 0);
    if (sample.rtt_us > cutoff_us) {
      ++excluded[sample.packet_size];
    } else {
      kept[sample.packet_size].push_back(sample.rtt_us);
    }
  }

  LatencyReport report;
  std::vector<std::pair<double, double>> points;
  for (auto& [size, values] : kept) {
    SizeRow row;
    row.size_bytes = size;
    row.excluded = excluded[size];
    row.summary = stats::summarize(values);
    if (row.summary.count > 0)
      points.emplace_back(static_cast<double>(size), row.summary.mean);
    report.rows.push_back(std::move(row));
  }
  report.regression = stats::fit_line(points);
  return report;
}

std::string LatencyReport::render() const {
  std::ostringstream os;
  os << "size_bytes mean_us variance q1_us median_us q3_us excluded_count\n";
  for (const auto& row : rows) {
    os << row.size_bytes << ' ' << fmt3(row.summary.mean) << ' ' << fmt3(row.summary.variance)
       << ' ' << fmt3(row.summary.q1) << ' ' << fmt3(row.summary.median) << ' '
       << fmt3(row.summary.q3) << ' ' << row.excluded << '\n';
  }
  os << "intercept_us slope_ns_per_byte residual_us\n";
  if (regression) {
    os << fmt3(regression->intercept) << ' ' << fmt3(regression->slope * 1000.0) << ' '
       << fmt3(regression->rmse) << '\n';
  } else {
    os << "nan nan nan\n";
  }
  return os.str();
}

std::string render_keygen_report(const std::vector<double>& seconds) {
  stats::Summary s = stats::summarize(seconds);
  std::ostringstream os;
  os << "metric value_s\n";
  os << "Mean " << fmt(s.mean) << '\n';
  os << "Variance " << fmt(s.variance) << '\n';
  os << "1st Quartile " << fmt(s.q1) << '\n';
  os << "Median " << fmt(s.median) << '\n';
  os << "3rd Quartile " << fmt(s.q3) << '\n';
  return os.str();
}

std::string render_attestation_report(const AttestationStageSamples& samples) {
  std::ostringstream os;
  os << "stage mean_s variance median_s\n";
  auto row = [&os](const char* label, const std::vector<double>& values) {
    stats::Summary s = stats::summarize(values);
    os << label << ' ' << fmt(s.mean) << ' ' << fmt(s.variance) << ' ' << fmt(s.median) << '\n';
  };
  row("TPM quote", samples.tpm_quote_s);
  row("Key generation", samples.key_generation_s);
  row("CSR signing", samples.csr_signing_s);
  row("Total", samples.total_s);
  return os.str();
}

EcallRow summarize_trace_window(const std::vector<compartment::TraceRecord>& window,
                                size_t size_bytes, uint64_t packets) {
  struct Acc {
    double sum_ns = 0;
    uint64_t count = 0;
  };
  Acc read, write, get_state, get_error;
  double all_ns = 0;
  for (const auto& record : window) {
    Acc* acc = nullptr;
    if (record.op == "ecall_ssl_read") acc = &read;
    else if (record.op == "ecall_ssl_write") acc = &write;
    else if (record.op == "ecall_ssl_get_state") acc = &get_state;
    else if (record.op == "ecall_ssl_get_error") acc = &get_error;
    if (!acc) continue;
    double ns = static_cast<double>(record.duration.count());
    acc->sum_ns += ns;
    ++acc->count;
    all_ns += ns;
  }
  auto mean_ms = [](const Acc& acc) {
    return acc.count ? acc.sum_ns / static_cast<double>(acc.count) / 1e6 : 0.0;
  };
  EcallRow row;
  row.size_bytes = size_bytes;
  row.read_ms = mean_ms(read);
  row.write_ms = mean_ms(write);
  row.get_state_ms = mean_ms(get_state);
  row.get_error_ms = mean_ms(get_error);
  row.total_ms = packets ? all_ns / static_cast<double>(packets) / 1e6 : 0.0;
  return row;
}

std::string render_ecall_report(const std::vector<EcallRow>& rows) {
  std::ostringstream os;
  os << "size_bytes ecall_ssl_read_ms ecall_ssl_write_ms ecall_ssl_get_state_ms "
        "ecall_ssl_get_error_ms total_enclave_access_ms\n";
  for (const auto& row : rows) {
    os << row.size_bytes << ' ' << fmt(row.read_ms) << ' ' << fmt(row.write_ms) << ' '
       << fmt(row.get_state_ms) << ' ' << fmt(row.get_error_ms) << ' ' << fmt(row.total_ms)
       << '\n';
  }
  return os.str();
}

// --- testbed ---

Testbed::Testbed() : Testbed(Options{}) {}

Testbed::Testbed(Options options) : options_(std::move(options)) {}

Testbed::~Testbed() {
  if (echo_) echo_->stop();
  if (switch_) switch_->stop();
  if (controller_) controller_->stop();
  if (agent_) agent_->stop();
  if (ca_server_) ca_server_->stop();
}

bool Testbed::start_services(std::string* error) {
  auto fail = [error](const char* message) {
    if (error) *error = message;
    return false;
  };

  agent::SimulatedHost::Options host_options;
  host_options.identity_seed = options_.identity_seed;
  host_ = std::make_unique<agent::SimulatedHost>(host_options);

  ca::KnownGoodConfig known_good;
  known_good.trusted_attestation_keys[host_->identity().key_id()] =
      host_->identity().public_key_raw();
  for (const auto& [path, content] : options_.measured) {
    Digest32 file_digest = sha256(view(content));
    known_good.allowed_template_digests.insert(
        measurement::template_digest_for(path, file_digest));
    known_good.required_paths.insert(path);
  }

  for (size_t i = 0; i < options_.measured.size(); ++i) {
    if (options_.tamper_skip_required && i == 0) continue;
    const auto& [path, content] = options_.measured[i];
    host_->measure_content(path, view(content));
  }
  if (options_.tamper_unknown_measurement) {
    std::string implant = "injected implant";
    host_->measure_content("/opt/sdn/rogue", view(implant));
  }
  if (options_.tamper_extra_extend) {
    std::string blob = "unlogged firmware blob";
    host_->extend_unlogged(measurement::kDefaultMeasurementPcr, sha256(view(blob)));
  }

  ca::CaOptions ca_options;
  ca_options.root_seed = options_.root_seed;
  ca_ = std::make_unique<ca::CertificateAuthority>(std::move(known_good), ca_options);
  ca_server_ = std::make_unique<ca::CaServer>(*ca_, net::Endpoint{"127.0.0.1", 0},
                                              net::Endpoint{"127.0.0.1", 0});
  if (!ca_server_->start()) return fail("CA listeners failed to bind");

  agent_ = std::make_unique<agent::AttestationAgent>(*host_, agent::AgentConfig{});
  if (!agent_->start()) return fail("agent failed to bind");

  // Controller credentials come from the operator-only interface.
  auto controller_key = pki::generate_rsa(2048);
  Bytes csr = pki::make_csr(controller_key.get(), "sdn-controller");
  ca::CaAdminClient admin(ca_server_->admin_endpoint());
  auto controller_cert = admin.sign_controller_csr(csr);
  auto root = admin.fetch_root_certificate();
  if (!controller_cert || !root) return fail("controller certificate issuance failed");

  LearningController::Options controller_options;
  controller_options.certificate_der = std::move(*controller_cert);
  controller_options.ca_root_der = std::move(*root);
  controller_ =
      std::make_unique<LearningController>(std::move(controller_key), std::move(controller_options));
  if (!controller_->start()) return fail("controller failed to start");

  comp_ = std::make_unique<compartment::TlsCompartment>(options_.comp);
  return true;
}

enroll::EnrollmentSession Testbed::enroll(const enroll::FaultPlan& faults) {
  return enroll::run_enrollment(ca_server_->main_endpoint(), agent_->endpoint(), *comp_, faults);
}

bool Testbed::start_dataplane(std::string* error) {
  auto fail = [error](const char* message) {
    if (error) *error = message;
    return false;
  };
  if (!comp_ || !comp_->initialized()) return fail("compartment is not enrolled");

  switch_ = std::make_unique<VirtualSwitch>(*comp_);
  auto [generator_side, switch_gen_side] = make_link();
  auto [echo_side, switch_echo_side] = make_link();
  generator_port_ = std::move(generator_side);
  switch_->attach_port(1, std::move(switch_gen_side));
  switch_->attach_port(2, std::move(switch_echo_side));
  echo_ = std::make_unique<EchoHost>(std::move(echo_side));

  if (!switch_->connect_southbound(controller_->endpoint()))
    return fail("southbound TLS session failed");
  if (!switch_->start()) return fail("switch loop failed to start");
  echo_->start();
  return true;
}

std::optional<TrafficResult> Testbed::run_traffic(const TrafficSpec& spec) {
  return harness::run_traffic(generator_port_, spec);
}

net::Endpoint Testbed::ca_endpoint() const { return ca_server_->main_endpoint(); }
net::Endpoint Testbed::ca_admin_endpoint() const { return ca_server_->admin_endpoint(); }
net::Endpoint Testbed::agent_endpoint() const { return agent_->endpoint(); }

}  // namespace trustplane::harness

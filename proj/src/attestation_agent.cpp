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

#include "trustplane/attestation_agent.hpp"

#include <fstream>
#include <sstream>

#include "trustplane/digest.hpp"

namespace trustplane::agent {
namespace {

constexpr int kIoTimeoutMs = 5000;

std::optional<Bytes> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string s = buf.str();
  return Bytes(s.begin(), s.end());
}

}  // namespace

SimulatedHost::SimulatedHost() : SimulatedHost(Options{}) {}

SimulatedHost::SimulatedHost(Options options)
    : identity_(options.identity_seed && options.identity_seed->size() == 32
                    ? rot::AttestationIdentity(view(*options.identity_seed))
                    : rot::AttestationIdentity()),
      measurement_pcr_(options.measurement_pcr) {}

bool SimulatedHost::measure_file(const std::string& path) {
  auto content = read_file(path);
  if (!content) return false;
  std::lock_guard lock(mu_);
  if (!measurement::measure(list_, bank_, measurement_pcr_, path, view(*content)))
    return false;
  tracked_files_[path] = sha256(view(*content));
  return true;
}

bool SimulatedHost::measure_content(const std::string& path, ByteView content) {
  std::lock_guard lock(mu_);
  return measurement::measure(list_, bank_, measurement_pcr_, path, content);
}

void SimulatedHost::refresh() {
  std::lock_guard lock(mu_);
  for (auto& [path, last_digest] : tracked_files_) {
    auto content = read_file(path);
    if (!content) continue;
    Digest32 digest = sha256(view(*content));
    if (digest == last_digest) continue;
    measurement::measure(list_, bank_, measurement_pcr_, path, view(*content));
    last_digest = digest;
  }
}

SimulatedHost::Snapshot SimulatedHost::snapshot() const {
  std::lock_guard lock(mu_);
  return {bank_, list_};
}

std::optional<rot::Quote> SimulatedHost::quote(const Nonce32& nonce,
                                               const std::vector<uint8_t>& selection) const {
  std::lock_guard lock(mu_);
  return rot::generate_quote(identity_, bank_, nonce, selection);
}

bool SimulatedHost::extend_unlogged(int pcr_index, const Digest32& digest) {
  std::lock_guard lock(mu_);
  return bank_.extend(pcr_index, digest);
}

// --- agent service ---

AttestationAgent::AttestationAgent(SimulatedHost& host, AgentConfig config)
    : host_(host), config_(std::move(config)) {}

AttestationAgent::~AttestationAgent() { stop(); }

bool AttestationAgent::start() {
  if (!config_.bound_endpoint.is_loopback()) return false;
  auto listener = net::TcpListener::bind(config_.bound_endpoint);
  if (!listener) return false;
  listener_ = std::move(*listener);
  stop_ = false;
  thread_ = std::thread([this] { serve(); });
  return true;
}

void AttestationAgent::stop() {
  stop_ = true;
  listener_.close();
  if (thread_.joinable()) thread_.join();
}

net::Endpoint AttestationAgent::endpoint() const { return listener_.local_endpoint(); }

void AttestationAgent::serve() {
  while (!stop_) {
    auto stream = listener_.accept(200);
    if (!stream) continue;
    auto peer = stream->peer();
    if (!peer || !peer->is_loopback()) {
      ++refused_;
      continue;  // dropped without a response
    }
    handle(std::move(*stream));
  }
}

void AttestationAgent::handle(net::TcpStream stream) {
  auto error = [&stream](uint8_t code) {
    Bytes out{kMsgError, code};
    stream.write_all(view(out));
    // Drain whatever the peer still has in flight; closing with unread
    // bytes would turn the error frame into a connection reset.
    stream.shutdown_write();
    Bytes discard;
    stream.read_to_eof(discard, 250);
  };

  uint8_t magic = 0;
  if (!stream.read_exact({&magic, 1}, kIoTimeoutMs)) return;
  if (magic != kMsgQuoteRequest) return error(kErrBadRequest);

  Nonce32 nonce;
  if (!stream.read_exact({nonce.data(), nonce.size()}, kIoTimeoutMs))
    return error(kErrShortNonce);

  // Changed binaries are re-measured before quoting, so a post-launch
  // modification shows up in the evidence.
  host_.refresh();

  // Snapshot under one lock acquisition so the quote and the list describe
  // the same instant even while measurements continue.
  SimulatedHost::Snapshot snap = host_.snapshot();
  auto quote = rot::generate_quote(host_.identity(), snap.bank, nonce, config_.pcr_selection);
  if (!quote) return error(kErrQuoteFailed);

  Bytes quote_bytes = quote->encode();
  std::string list_text = snap.list.serialize();

  Bytes out{kMsgQuoteResponse};
  append_u16be(out, static_cast<uint16_t>(quote_bytes.size()));
  append(out, view(quote_bytes));
  append_u32be(out, static_cast<uint32_t>(list_text.size()));
  append(out, ByteView{reinterpret_cast<const uint8_t*>(list_text.data()), list_text.size()});
  stream.write_all(view(out));
}

std::optional<AgentClient::Evidence> AgentClient::request_evidence(const Nonce32& nonce) {
  auto stream = net::TcpStream::connect(endpoint_, kIoTimeoutMs);
  if (!stream) return std::nullopt;

  Bytes out{kMsgQuoteRequest};
  append(out, view(nonce));
  if (!stream->write_all(view(out))) return std::nullopt;
  stream->shutdown_write();

  uint8_t kind = 0;
  if (!stream->read_exact({&kind, 1}, kIoTimeoutMs)) return std::nullopt;
  if (kind != kMsgQuoteResponse) return std::nullopt;

  uint8_t len2[2];
  if (!stream->read_exact(len2, kIoTimeoutMs)) return std::nullopt;
  Evidence evidence;
  evidence.quote_bytes.resize(read_u16be(len2));
  if (!stream->read_exact({evidence.quote_bytes.data(), evidence.quote_bytes.size()}, kIoTimeoutMs))
    return std::nullopt;

  uint8_t len4[4];
  if (!stream->read_exact(len4, kIoTimeoutMs)) return std::nullopt;
  uint32_t list_len = read_u32be(len4);
  if (list_len > 4 * 1024 * 1024) return std::nullopt;
  evidence.list_text.resize(list_len);
  if (!stream->read_exact({reinterpret_cast<uint8_t*>(evidence.list_text.data()), list_len},
                          kIoTimeoutMs))
    return std::nullopt;
  return evidence;
}

}  // namespace trustplane::agent

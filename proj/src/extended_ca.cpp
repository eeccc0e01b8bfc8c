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

#include "trustplane/extended_ca.hpp"

#include "trustplane/digest.hpp"
#include "trustplane/rng.hpp"

namespace trustplane::ca {
namespace {

constexpr size_t kMaxListBytes = 4 * 1024 * 1024;
constexpr size_t kMaxCsrBytes = 1 * 1024 * 1024;
constexpr int kIoTimeoutMs = 5000;

std::optional<RejectReason> reason_from_wire(uint8_t code) {
  if (code < 1 || code > 7) return std::nullopt;
  return static_cast<RejectReason>(code);
}

}  // namespace

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::QUOTE_SIG: return "QUOTE_SIG";
    case RejectReason::NONCE: return "NONCE";
    case RejectReason::PCR_MISMATCH: return "PCR_MISMATCH";
    case RejectReason::UNKNOWN_MEASUREMENT: return "UNKNOWN_MEASUREMENT";
    case RejectReason::MISSING_REQUIRED: return "MISSING_REQUIRED";
    case RejectReason::BAD_CSR: return "BAD_CSR";
    case RejectReason::MALFORMED: return "MALFORMED";
  }
  return "UNKNOWN";
}

CertificateAuthority::CertificateAuthority(KnownGoodConfig config, CaOptions options)
    : config_(std::move(config)), options_(std::move(options)) {
  if (options_.root_seed && options_.root_seed->size() == 32) {
    root_key_ = pki::ed25519_from_seed(view(*options_.root_seed));
  } else {
    root_key_ = pki::generate_ed25519();
  }
  root_cert_der_ = pki::make_self_signed_root(root_key_.get(), options_.root_cn, 365);
}

Nonce32 CertificateAuthority::issue_nonce() {
  std::lock_guard lock(mu_);
  for (;;) {
    Nonce32 nonce = RandomSource::instance().nonce32();
    auto [it, inserted] = nonces_.try_emplace(nonce, NonceRecord{Clock::now(), false});
    if (inserted) return it->first;
  }
}

size_t CertificateAuthority::unconsumed_nonce_count() const {
  std::lock_guard lock(mu_);
  size_t n = 0;
  for (const auto& [nonce, record] : nonces_)
    if (!record.consumed) ++n;
  return n;
}

std::optional<RejectReason> CertificateAuthority::run_checks(const EnrollmentRequest& request) {
  const rot::Quote& quote = request.quote;

  // (a) The quote must be signed by a pre-registered root of trust.
  auto key_it = config_.trusted_attestation_keys.find(quote.key_id);
  if (key_it == config_.trusted_attestation_keys.end()) return RejectReason::QUOTE_SIG;
  if (!rot::verify_quote(quote, quote.nonce, view(key_it->second)))
    return RejectReason::QUOTE_SIG;

  // (b) The nonce must be one we issued, fresh, and never used before. It is
  // consumed here, so later failures still burn it.
  {
    std::lock_guard lock(mu_);
    auto it = nonces_.find(quote.nonce);
    if (it == nonces_.end() || it->second.consumed) return RejectReason::NONCE;
    if (Clock::now() - it->second.issued_at > options_.nonce_ttl) return RejectReason::NONCE;
    it->second.consumed = true;
  }

  // (c) The measurement list must replay to the quoted register state.
  const uint8_t pcr = static_cast<uint8_t>(config_.measurement_pcr);
  if (quote.pcr_selection.size() != 1 || quote.pcr_selection[0] != pcr)
    return RejectReason::PCR_MISMATCH;
  for (const auto& entry : request.measurement_list.entries())
    if (entry.pcr_index != config_.measurement_pcr) return RejectReason::PCR_MISMATCH;
  Digest32 replayed = measurement::replay(request.measurement_list);
  if (sha256(view(replayed)) != quote.pcr_composite) return RejectReason::PCR_MISMATCH;

  // (d) Every measured object must be allowlisted.
  for (const auto& entry : request.measurement_list.entries())
    if (!config_.allowed_template_digests.contains(entry.template_digest))
      return RejectReason::UNKNOWN_MEASUREMENT;

  // (e) Everything the policy requires must have been measured.
  std::set<std::string> seen;
  for (const auto& entry : request.measurement_list.entries()) seen.insert(entry.path);
  for (const auto& path : config_.required_paths)
    if (!seen.contains(path)) return RejectReason::MISSING_REQUIRED;

  return std::nullopt;
}

EnrollOutcome CertificateAuthority::enroll(const EnrollmentRequest& request) {
  if (auto reason = run_checks(request)) return {std::nullopt, *reason};

  // (f) Proof of possession, then issuance.
  uint64_t serial;
  {
    std::lock_guard lock(mu_);
    serial = next_serial_++;
  }
  auto cert = pki::sign_csr(request.csr_der, root_key_.get(), root_cert_der_,
                            options_.certificate_validity_seconds, serial);
  if (!cert) return {std::nullopt, RejectReason::BAD_CSR};
  return {std::move(cert), std::nullopt};
}

Bytes CertificateAuthority::root_certificate() const { return root_cert_der_; }

std::optional<Bytes> CertificateAuthority::issue_controller_certificate(const Bytes& csr_der) {
  uint64_t serial;
  {
    std::lock_guard lock(mu_);
    serial = next_serial_++;
  }
  return pki::sign_csr(csr_der, root_key_.get(), root_cert_der_,
                       options_.certificate_validity_seconds, serial);
}

// --- wire server ---

CaServer::CaServer(CertificateAuthority& ca, net::Endpoint main_ep, net::Endpoint admin_ep)
    : ca_(ca), main_requested_(std::move(main_ep)), admin_requested_(std::move(admin_ep)) {}

CaServer::~CaServer() { stop(); }

bool CaServer::start() {
  auto main_listener = net::TcpListener::bind(main_requested_);
  if (!main_listener) return false;
  auto admin_listener = net::TcpListener::bind(admin_requested_);
  if (!admin_listener) return false;
  main_listener_ = std::move(*main_listener);
  admin_listener_ = std::move(*admin_listener);
  stop_ = false;
  main_thread_ = std::thread([this] { serve(main_listener_, false); });
  admin_thread_ = std::thread([this] { serve(admin_listener_, true); });
  return true;
}

void CaServer::stop() {
  stop_ = true;
  main_listener_.close();
  admin_listener_.close();
  if (main_thread_.joinable()) main_thread_.join();
  if (admin_thread_.joinable()) admin_thread_.join();
}

net::Endpoint CaServer::main_endpoint() const { return main_listener_.local_endpoint(); }
net::Endpoint CaServer::admin_endpoint() const { return admin_listener_.local_endpoint(); }

void CaServer::serve(net::TcpListener& listener, bool admin) {
  while (!stop_) {
    auto stream = listener.accept(200);
    if (!stream) continue;
    if (admin) {
      handle_admin(std::move(*stream));
    } else {
      handle_main(std::move(*stream));
    }
  }
}

void CaServer::handle_main(net::TcpStream stream) {
  auto reject = [&stream](RejectReason reason) {
    Bytes out{kMsgEnrollReject, static_cast<uint8_t>(reason)};
    stream.write_all(view(out));
    // Drain leftover request bytes so the close is an EOF, not a reset.
    stream.shutdown_write();
    Bytes discard;
    stream.read_to_eof(discard, 250);
  };

  uint8_t magic = 0;
  if (!stream.read_exact({&magic, 1}, kIoTimeoutMs)) return;

  if (magic == kMsgNonceRequest) {
    Nonce32 nonce = ca_.issue_nonce();
    Bytes out{kMsgNonceResponse};
    append(out, view(nonce));
    stream.write_all(view(out));
    return;
  }

  if (magic == kMsgRootRequest) {
    Bytes out{kMsgRootResponse};
    append(out, view(ca_.root_certificate()));
    stream.write_all(view(out));
    return;
  }

  if (magic != kMsgEnrollRequest) {
    reject(RejectReason::MALFORMED);
    return;
  }

  uint8_t len2[2];
  if (!stream.read_exact(len2, kIoTimeoutMs)) return reject(RejectReason::MALFORMED);
  Bytes quote_bytes(read_u16be(len2), 0);
  if (!stream.read_exact({quote_bytes.data(), quote_bytes.size()}, kIoTimeoutMs))
    return reject(RejectReason::MALFORMED);

  uint8_t len4[4];
  if (!stream.read_exact(len4, kIoTimeoutMs)) return reject(RejectReason::MALFORMED);
  uint32_t list_len = read_u32be(len4);
  if (list_len > kMaxListBytes) return reject(RejectReason::MALFORMED);
  std::string list_text(list_len, '\0');
  if (!stream.read_exact({reinterpret_cast<uint8_t*>(list_text.data()), list_len}, kIoTimeoutMs))
    return reject(RejectReason::MALFORMED);

  if (!stream.read_exact(len4, kIoTimeoutMs)) return reject(RejectReason::MALFORMED);
  uint32_t csr_len = read_u32be(len4);
  if (csr_len > kMaxCsrBytes) return reject(RejectReason::MALFORMED);
  Bytes csr(csr_len, 0);
  if (!stream.read_exact({csr.data(), csr.size()}, kIoTimeoutMs))
    return reject(RejectReason::MALFORMED);

  auto quote = rot::Quote::decode(view(quote_bytes));
  if (!quote) return reject(RejectReason::QUOTE_SIG);
  auto list = measurement::MeasurementList::parse(list_text);
  if (!list) return reject(RejectReason::PCR_MISMATCH);

  EnrollOutcome outcome = ca_.enroll({std::move(*quote), std::move(*list), std::move(csr)});
  if (!outcome.ok()) return reject(*outcome.reason);

  Bytes out{kMsgEnrollCert};
  append(out, view(*outcome.certificate_der));
  stream.write_all(view(out));
}

void CaServer::handle_admin(net::TcpStream stream) {
  auto reject = [&stream](RejectReason reason) {
    Bytes out{kMsgAdminReject, static_cast<uint8_t>(reason)};
    stream.write_all(view(out));
    stream.shutdown_write();
    Bytes discard;
    stream.read_to_eof(discard, 250);
  };

  uint8_t magic = 0;
  if (!stream.read_exact({&magic, 1}, kIoTimeoutMs)) return;

  if (magic == kMsgAdminRootRequest) {
    Bytes out{kMsgAdminRootCert};
    append(out, view(ca_.root_certificate()));
    stream.write_all(view(out));
    return;
  }

  if (magic != kMsgAdminSignRequest) return reject(RejectReason::MALFORMED);

  uint8_t len4[4];
  if (!stream.read_exact(len4, kIoTimeoutMs)) return reject(RejectReason::MALFORMED);
  uint32_t csr_len = read_u32be(len4);
  if (csr_len > kMaxCsrBytes) return reject(RejectReason::MALFORMED);
  Bytes csr(csr_len, 0);
  if (!stream.read_exact({csr.data(), csr.size()}, kIoTimeoutMs))
    return reject(RejectReason::MALFORMED);

  auto cert = ca_.issue_controller_certificate(csr);
  if (!cert) return reject(RejectReason::BAD_CSR);
  Bytes out{kMsgAdminSignCert};
  append(out, view(*cert));
  stream.write_all(view(out));
}

// --- clients ---

std::optional<Nonce32> CaClient::request_nonce() {
  auto stream = net::TcpStream::connect(endpoint_, kIoTimeoutMs);
  if (!stream) return std::nullopt;
  uint8_t req = kMsgNonceRequest;
  if (!stream->write_all({&req, 1})) return std::nullopt;
  stream->shutdown_write();
  uint8_t resp[1 + 32];
  if (!stream->read_exact(resp, kIoTimeoutMs)) return std::nullopt;
  if (resp[0] != kMsgNonceResponse) return std::nullopt;
  Nonce32 nonce;
  std::copy(resp + 1, resp + 33, nonce.begin());
  return nonce;
}

std::optional<Bytes> CaClient::fetch_root_certificate() {
  auto stream = net::TcpStream::connect(endpoint_, kIoTimeoutMs);
  if (!stream) return std::nullopt;
  uint8_t req = kMsgRootRequest;
  if (!stream->write_all({&req, 1})) return std::nullopt;
  stream->shutdown_write();
  uint8_t kind = 0;
  if (!stream->read_exact({&kind, 1}, kIoTimeoutMs)) return std::nullopt;
  if (kind != kMsgRootResponse) return std::nullopt;
  Bytes body;
  if (!stream->read_to_eof(body, kIoTimeoutMs) || body.empty()) return std::nullopt;
  return body;
}

CaClient::SubmitResult CaClient::submit(const Bytes& quote_bytes, const std::string& list_text,
                                        const Bytes& csr_der) {
  SubmitResult result;
  auto stream = net::TcpStream::connect(endpoint_, kIoTimeoutMs);
  if (!stream) return result;

  Bytes out{kMsgEnrollRequest};
  append_u16be(out, static_cast<uint16_t>(quote_bytes.size()));
  append(out, view(quote_bytes));
  append_u32be(out, static_cast<uint32_t>(list_text.size()));
  append(out, ByteView{reinterpret_cast<const uint8_t*>(list_text.data()), list_text.size()});
  append_u32be(out, static_cast<uint32_t>(csr_der.size()));
  append(out, view(csr_der));
  if (!stream->write_all(view(out))) return result;
  stream->shutdown_write();

  uint8_t kind = 0;
  if (!stream->read_exact({&kind, 1}, kIoTimeoutMs)) return result;
  if (kind == kMsgEnrollCert) {
    Bytes body;
    if (!stream->read_to_eof(body, kIoTimeoutMs) || body.empty()) return result;
    result.transport_ok = true;
    result.certificate_der = std::move(body);
    return result;
  }
  if (kind == kMsgEnrollReject) {
    uint8_t code = 0;
    if (!stream->read_exact({&code, 1}, kIoTimeoutMs)) return result;
    auto reason = reason_from_wire(code);
    if (!reason) return result;
    result.transport_ok = true;
    result.reason = reason;
  }
  return result;
}

std::optional<Bytes> CaAdminClient::fetch_root_certificate() {
  auto stream = net::TcpStream::connect(endpoint_, kIoTimeoutMs);
  if (!stream) return std::nullopt;
  uint8_t req = kMsgAdminRootRequest;
  if (!stream->write_all({&req, 1})) return std::nullopt;
  stream->shutdown_write();
  uint8_t kind = 0;
  if (!stream->read_exact({&kind, 1}, kIoTimeoutMs)) return std::nullopt;
  if (kind != kMsgAdminRootCert) return std::nullopt;
  Bytes body;
  if (!stream->read_to_eof(body, kIoTimeoutMs) || body.empty()) return std::nullopt;
  return body;
}

std::optional<Bytes> CaAdminClient::sign_controller_csr(const Bytes& csr_der) {
  auto stream = net::TcpStream::connect(endpoint_, kIoTimeoutMs);
  if (!stream) return std::nullopt;
  Bytes out{kMsgAdminSignRequest};
  append_u32be(out, static_cast<uint32_t>(csr_der.size()));
  append(out, view(csr_der));
  if (!stream->write_all(view(out))) return std::nullopt;
  stream->shutdown_write();
  uint8_t kind = 0;
  if (!stream->read_exact({&kind, 1}, kIoTimeoutMs)) return std::nullopt;
  if (kind != kMsgAdminSignCert) return std::nullopt;
  Bytes body;
  if (!stream->read_to_eof(body, kIoTimeoutMs) || body.empty()) return std::nullopt;
  return body;
}

}  // namespace trustplane::ca

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

#include <chrono>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "trustplane/measurement_log.hpp"
#include "trustplane/net.hpp"
#include "trustplane/pki.hpp"
#include "trustplane/root_of_trust.hpp"

namespace trustplane::ca {

/// Rejection codes, one per enrollment check, in check order. Values are the
/// wire encoding.
enum class RejectReason : uint8_t {
  QUOTE_SIG = 1,            // quote signature invalid or signer unknown
  NONCE = 2,                // nonce not issued, already consumed, or expired
  PCR_MISMATCH = 3,         // measurement list does not replay to the quoted state
  UNKNOWN_MEASUREMENT = 4,  // some template digest is not allowlisted
  MISSING_REQUIRED = 5,     // a required path was never measured
  BAD_CSR = 6,              // CSR malformed or proof of possession failed
  MALFORMED = 7,            // request could not be decoded at all
};
const char* to_string(RejectReason reason);

/// CA-side description of trustworthy platform state.
struct KnownGoodConfig {
  std::set<Digest32> allowed_template_digests;
  std::set<std::string> required_paths;
  // key_id -> raw ed25519 public key of a pre-registered root of trust.
  std::map<KeyId8, Bytes> trusted_attestation_keys;
  int measurement_pcr = measurement::kDefaultMeasurementPcr;
};

struct EnrollmentRequest {
  rot::Quote quote;
  measurement::MeasurementList measurement_list;
  Bytes csr_der;
};

struct EnrollOutcome {
  std::optional<Bytes> certificate_der;
  std::optional<RejectReason> reason;
  bool ok() const { return certificate_der.has_value(); }
};

struct CaOptions {
  std::chrono::milliseconds nonce_ttl{60'000};
  long certificate_validity_seconds = 24L * 3600;
  std::optional<Bytes> root_seed;  // 32 bytes; deterministic root identity
  std::string root_cn = "trustplane-root";
};

/// Certificate authority with extended functionality: it issues nonces,
/// verifies quotes and measurement lists against the known-good
/// configuration, and signs CSRs only for attested platforms. Check order is
/// fixed (QUOTE_SIG, NONCE, PCR_MISMATCH, UNKNOWN_MEASUREMENT,
/// MISSING_REQUIRED, BAD_CSR) so rejection codes are deterministic. A nonce
/// is consumed by its first enrollment attempt, successful or not.
class CertificateAuthority {
 public:
  explicit CertificateAuthority(KnownGoodConfig config, CaOptions options = {});

  Nonce32 issue_nonce();
  EnrollOutcome enroll(const EnrollmentRequest& request);
  Bytes root_certificate() const;

  // Operator-only path: signs without attestation (the controller is trusted
  // by the threat model). Reachable only through the admin listener.
  std::optional<Bytes> issue_controller_certificate(const Bytes& csr_der);

  const KnownGoodConfig& config() const { return config_; }
  size_t unconsumed_nonce_count() const;

 private:
  using Clock = std::chrono::steady_clock;
  struct NonceRecord {
    Clock::time_point issued_at;
    bool consumed = false;
  };

  std::optional<RejectReason> run_checks(const EnrollmentRequest& request);

  KnownGoodConfig config_;
  CaOptions options_;
  pki::KeyPtr root_key_;
  Bytes root_cert_der_;

  mutable std::mutex mu_;
  std::map<Nonce32, NonceRecord> nonces_;
  uint64_t next_serial_ = 2;
};

// Wire protocol over a plain byte stream, one exchange per connection.
inline constexpr uint8_t kMsgNonceRequest = 0x10;
inline constexpr uint8_t kMsgNonceResponse = 0x11;
inline constexpr uint8_t kMsgEnrollRequest = 0x12;
inline constexpr uint8_t kMsgEnrollCert = 0x13;
inline constexpr uint8_t kMsgRootRequest = 0x14;
inline constexpr uint8_t kMsgRootResponse = 0x15;
inline constexpr uint8_t kMsgEnrollReject = 0x1F;
inline constexpr uint8_t kMsgAdminSignRequest = 0x20;
inline constexpr uint8_t kMsgAdminSignCert = 0x21;
inline constexpr uint8_t kMsgAdminRootRequest = 0x22;
inline constexpr uint8_t kMsgAdminRootCert = 0x23;
inline constexpr uint8_t kMsgAdminReject = 0x2F;

/// Serves the enrollment protocol and, on a separate listener, the
/// operator-only administrative protocol.
class CaServer {
 public:
  CaServer(CertificateAuthority& ca, net::Endpoint main_ep, net::Endpoint admin_ep);
  ~CaServer();

  bool start();
  void stop();
  net::Endpoint main_endpoint() const;
  net::Endpoint admin_endpoint() const;

 private:
  void serve(net::TcpListener& listener, bool admin);
  void handle_main(net::TcpStream stream);
  void handle_admin(net::TcpStream stream);

  CertificateAuthority& ca_;
  net::Endpoint main_requested_;
  net::Endpoint admin_requested_;
  net::TcpListener main_listener_;
  net::TcpListener admin_listener_;
  std::atomic<bool> stop_{false};
  std::thread main_thread_;
  std::thread admin_thread_;
};

/// Client side of the enrollment protocol.
class CaClient {
 public:
  explicit CaClient(net::Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

  std::optional<Nonce32> request_nonce();
  // The root is public; enrollees fetch it to verify their issued chain.
  std::optional<Bytes> fetch_root_certificate();

  struct SubmitResult {
    bool transport_ok = false;
    std::optional<Bytes> certificate_der;
    std::optional<RejectReason> reason;
  };
  SubmitResult submit(const Bytes& quote_bytes, const std::string& list_text,
                      const Bytes& csr_der);

 private:
  net::Endpoint endpoint_;
};

/// Client side of the administrative protocol.
class CaAdminClient {
 public:
  explicit CaAdminClient(net::Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

  std::optional<Bytes> fetch_root_certificate();
  std::optional<Bytes> sign_controller_csr(const Bytes& csr_der);

 private:
  net::Endpoint endpoint_;
};

}  // namespace trustplane::ca

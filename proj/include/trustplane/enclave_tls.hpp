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
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "trustplane/net.hpp"
#include "trustplane/pki.hpp"

typedef struct ssl_ctx_st SSL_CTX;

namespace trustplane::compartment {

enum class SslState { HANDSHAKING, ESTABLISHED, CLOSED, ERROR };
enum class SslError { NONE, WANT_READ, WANT_WRITE, SYSCALL, SSL_FAILURE };
const char* to_string(SslState state);
const char* to_string(SslError error);

// Operation return codes (negative values; positive returns are byte counts).
inline constexpr int kWouldBlock = -1;
inline constexpr int kInvalidHandle = -2;
inline constexpr int kBadState = -3;
inline constexpr int kFailure = -4;

bool suite_is_ecdhe(const std::string& suite_name);
bool suite_is_aead(const std::string& suite_name);

/// Cipher-suite policy for the compartment's client handshakes. The default
/// pins the single legacy suite the reference deployment negotiates; the
/// hardened mode (require_ecdhe + require_aead) strips RSA key exchange and
/// CBC modes from whatever is allowed.
struct CipherPolicy {
  bool require_ecdhe = false;
  bool require_aead = false;
  std::vector<std::string> allowed_suites{"ECDHE-RSA-AES256-SHA"};

  std::vector<std::string> effective_suites() const;
  std::string cipher_string() const;  // OpenSSL list form of effective_suites
};

/// Opaque session token. Valid only within the issuing compartment; carries
/// no key material.
struct TlsContextHandle {
  uint64_t id = 0;
};

struct TraceRecord {
  std::string op;  // e.g. "ecall_ssl_write"
  std::chrono::nanoseconds duration{0};
};

struct CompartmentOptions {
  CipherPolicy policy;
  bool trace_ecalls = false;
  // Records everything that crosses the boundary outward (ciphertext, CSR,
  // certificates, delivered plaintext) for secret-leak scans.
  bool capture_egress = false;
  std::string common_name = "virtual-switch";
  int handshake_timeout_ms = 5000;
  int io_timeout_ms = 5000;
  int rsa_bits = 2048;
};

struct InitStatus {
  bool ok = false;
  uint8_t reject_code = 0;  // CA rejection reason when nonzero
  std::string detail;
  std::chrono::microseconds elapsed{0};
};

/// Isolated credential and TLS-session holder. The keypair, certificates,
/// and all session state live inside; callers interact exclusively through
/// the narrow call surface below, and nothing secret is ever part of a
/// return value or emitted byte. Isolation here is an interface contract
/// enforced by tests, not a hardware boundary.
class TlsCompartment {
 public:
  explicit TlsCompartment(CompartmentOptions options = {});
  ~TlsCompartment();
  TlsCompartment(const TlsCompartment&) = delete;
  TlsCompartment& operator=(const TlsCompartment&) = delete;

  /// One-shot bring-up: runs the full enrollment sequence against the given
  /// services, leaving the compartment with a fresh keypair and a CA-signed
  /// certificate. Elapsed covers invocation through credentials-loaded.
  /// Fails without retained credentials on any step failure; a failed
  /// compartment may be initialized again.
  InitStatus library_init(const net::Endpoint& ca_endpoint, const net::Endpoint& agent_endpoint);

  bool initialized() const;

  // Enrollment support surface, driven by the enrollment state machine. Only
  // public artifacts (CSR, certificates) cross the boundary.
  bool enroll_generate_key();
  std::optional<Bytes> enroll_make_csr();
  bool enroll_install(const Bytes& certificate_der, const Bytes& ca_root_der);
  void discard_enrollment();

  /// Client handshake with mutual authentication over the supplied
  /// transport. Always returns a handle; consult ssl_get_state for the
  /// outcome (ESTABLISHED or ERROR).
  TlsContextHandle ssl_new_and_connect(net::TcpStream transport);

  /// Returns bytes consumed (> 0), 0 for an empty buffer (no record
  /// emitted), or a negative code. kWouldBlock means retry after the
  /// transport drains.
  int ssl_write(TlsContextHandle handle, ByteView plaintext);

  /// Returns (n > 0, plaintext) when application data is available; (0, {})
  /// after an orderly peer close; (kWouldBlock, {}) when no data arrived
  /// within wait_ms (ssl_get_error then reports WANT_READ; repeat the call).
  std::pair<int, Bytes> ssl_read(TlsContextHandle handle, size_t capacity, int wait_ms = 0);

  std::optional<SslState> ssl_get_state(TlsContextHandle handle) const;
  std::optional<SslError> ssl_get_error(TlsContextHandle handle, int last_return) const;
  bool ssl_free(TlsContextHandle handle);

  std::vector<TraceRecord> boundary_trace(TlsContextHandle handle) const;

  std::optional<std::string> negotiated_suite(TlsContextHandle handle) const;
  std::optional<std::string> negotiated_version(TlsContextHandle handle) const;

  Bytes certificate() const;  // empty until initialized
  Bytes ca_root() const;

  // Boundary audit support. The needle set covers every secret the
  // compartment holds: private-key encodings (PKCS#8 and PKCS#1), raw RSA
  // secret components, and per-session TLS master secrets.
  Bytes egress_snapshot() const;
  size_t count_secret_occurrences(ByteView haystack) const;
  size_t secret_needle_count() const;
  // Sanity check that the scanner can see the needles at all.
  bool scan_positive_control() const;

  const CompartmentOptions& options() const { return options_; }

 private:
  struct Context;

  std::shared_ptr<Context> find(TlsContextHandle handle) const;
  void capture(ByteView data);
  void add_needle(Bytes needle);
  enum class FlushResult { OK, BLOCKED, FAILED };
  FlushResult flush_egress(Context& ctx);
  enum class FillResult { ADDED, TIMEOUT, CLOSED, FAILED };
  FillResult fill_ingress(Context& ctx, int wait_ms);
  bool handshake(Context& ctx);

  CompartmentOptions options_;

  mutable std::mutex mu_;
  bool initialized_ = false;
  pki::KeyPtr key_;  // pending until enroll_install promotes it
  Bytes certificate_der_;
  Bytes ca_root_der_;
  SSL_CTX* ssl_ctx_ = nullptr;
  std::map<uint64_t, std::shared_ptr<Context>> contexts_;
  uint64_t instance_tag_;
  uint32_t next_context_ = 1;
  std::vector<Bytes> needles_;

  mutable std::mutex egress_mu_;
  Bytes egress_;
};

}  // namespace trustplane::compartment

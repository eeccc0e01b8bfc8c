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

#include "trustplane/enclave_tls.hpp"

#include <openssl/err.h>
#include <openssl/ssl.h>
#include <openssl/x509.h>
#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <cerrno>

#include "trustplane/rng.hpp"

namespace trustplane::compartment {
namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() < 0 ? 0 : static_cast<int>(left.count());
}

struct X509Deleter {
  void operator()(X509* x) const { X509_free(x); }
};
using X509Ptr = std::unique_ptr<X509, X509Deleter>;

X509Ptr x509_from_der(const Bytes& der) {
  const unsigned char* p = der.data();
  return X509Ptr(d2i_X509(nullptr, &p, static_cast<long>(der.size())));
}

}  // namespace

const char* to_string(SslState state) {
  switch (state) {
    case SslState::HANDSHAKING: return "HANDSHAKING";
    case SslState::ESTABLISHED: return "ESTABLISHED";
    case SslState::CLOSED: return "CLOSED";
    case SslState::ERROR: return "ERROR";
  }
  return "?";
}

const char* to_string(SslError error) {
  switch (error) {
    case SslError::NONE: return "NONE";
    case SslError::WANT_READ: return "WANT_READ";
    case SslError::WANT_WRITE: return "WANT_WRITE";
    case SslError::SYSCALL: return "SYSCALL";
    case SslError::SSL_FAILURE: return "SSL_FAILURE";
  }
  return "?";
}

bool suite_is_ecdhe(const std::string& suite_name) {
  return suite_name.find("ECDHE-") != std::string::npos;
}

bool suite_is_aead(const std::string& suite_name) {
  return suite_name.find("GCM") != std::string::npos ||
         suite_name.find("CHACHA20-POLY1305") != std::string::npos ||
         suite_name.find("CCM") != std::string::npos;
}

std::vector<std::string> CipherPolicy::effective_suites() const {
  std::vector<std::string> out;
  for (const auto& suite : allowed_suites) {
    if (require_ecdhe && !suite_is_ecdhe(suite)) continue;
    if (require_aead && !suite_is_aead(suite)) continue;
    out.push_back(suite);
  }
  return out;
}

std::string CipherPolicy::cipher_string() const {
  auto suites = effective_suites();
  if (suites.empty()) {
    // Nothing from the allowlist survives the policy; fall back to the
    // broadest set satisfying it.
    if (require_ecdhe && require_aead) return "ECDHE+AESGCM:ECDHE+CHACHA20";
    if (require_ecdhe) return "ECDHE";
    return "DEFAULT";
  }
  std::string joined;
  for (const auto& suite : suites) {
    if (!joined.empty()) joined += ':';
    joined += suite;
  }
  return joined;
}

/// Per-session state. Ciphertext moves between the in-memory TLS engine and
/// the transport through explicit pumps, so every byte that leaves the
/// compartment passes through one audit point (flush_egress).
struct TlsCompartment::Context {
  std::mutex mu;
  net::TcpStream transport;
  SSL* ssl = nullptr;       // owns its BIO pair
  BIO* rbio = nullptr;      // network -> engine
  BIO* wbio = nullptr;      // engine -> network
  SslState state = SslState::HANDSHAKING;
  SslError last_error = SslError::NONE;
  bool transport_eof = false;
  Bytes pending_egress;
  std::string suite;
  std::string version;
  std::vector<TraceRecord> trace;

  ~Context() {
    if (ssl) SSL_free(ssl);
  }
};

namespace {

/// Appends one trace record on scope exit (when tracing is on).
class Tracer {
 public:
  Tracer(bool enabled, std::vector<TraceRecord>* sink, const char* op)
      : sink_(enabled ? sink : nullptr), op_(op), start_(Clock::now()) {}
  ~Tracer() {
    if (sink_) sink_->push_back({op_, Clock::now() - start_});
  }

 private:
  std::vector<TraceRecord>* sink_;
  const char* op_;
  Clock::time_point start_;
};

}  // namespace

TlsCompartment::TlsCompartment(CompartmentOptions options) : options_(std::move(options)) {
  instance_tag_ = RandomSource::instance().next_u64() << 32;
  if (instance_tag_ == 0) instance_tag_ = uint64_t{1} << 32;
}

TlsCompartment::~TlsCompartment() {
  std::lock_guard lock(mu_);
  contexts_.clear();
  if (ssl_ctx_) SSL_CTX_free(ssl_ctx_);
}

bool TlsCompartment::initialized() const {
  std::lock_guard lock(mu_);
  return initialized_;
}

bool TlsCompartment::enroll_generate_key() {
  std::lock_guard lock(mu_);
  if (initialized_) return false;
  key_ = pki::generate_rsa(options_.rsa_bits);
  if (!key_) return false;
  // Everything derived from the private half becomes a needle for the
  // boundary scans.
  needles_.clear();
  needles_.push_back(pki::private_key_der_pkcs8(key_.get()));
  needles_.push_back(pki::private_key_der_pkcs1(key_.get()));
  for (auto& component : pki::rsa_secret_components(key_.get()))
    needles_.push_back(std::move(component));
  return true;
}

std::optional<Bytes> TlsCompartment::enroll_make_csr() {
  Bytes csr;
  {
    std::lock_guard lock(mu_);
    if (initialized_ || !key_) return std::nullopt;
    csr = pki::make_csr(key_.get(), options_.common_name);
    if (csr.empty()) return std::nullopt;
  }
  capture(view(csr));
  return csr;
}

bool TlsCompartment::enroll_install(const Bytes& certificate_der, const Bytes& ca_root_der) {
  std::lock_guard lock(mu_);
  if (initialized_ || !key_) return false;
  if (!pki::cert_matches_key(certificate_der, key_.get())) return false;
  if (!pki::verify_cert_chain(certificate_der, ca_root_der)) return false;

  X509Ptr cert = x509_from_der(certificate_der);
  X509Ptr root = x509_from_der(ca_root_der);
  if (!cert || !root) return false;

  SSL_CTX* ctx = SSL_CTX_new(TLS_client_method());
  if (!ctx) return false;
  bool ok = SSL_CTX_set_min_proto_version(ctx, TLS1_2_VERSION) == 1 &&
            SSL_CTX_set_max_proto_version(ctx, TLS1_2_VERSION) == 1 &&
            SSL_CTX_set_cipher_list(ctx, options_.policy.cipher_string().c_str()) == 1 &&
            SSL_CTX_use_certificate(ctx, cert.get()) == 1 &&
            SSL_CTX_use_PrivateKey(ctx, key_.get()) == 1 &&
            X509_STORE_add_cert(SSL_CTX_get_cert_store(ctx), root.get()) == 1;
  if (!ok) {
    SSL_CTX_free(ctx);
    ERR_clear_error();
    return false;
  }
  SSL_CTX_set_verify(ctx, SSL_VERIFY_PEER, nullptr);

  if (ssl_ctx_) SSL_CTX_free(ssl_ctx_);
  ssl_ctx_ = ctx;
  certificate_der_ = certificate_der;
  ca_root_der_ = ca_root_der;
  initialized_ = true;
  return true;
}

void TlsCompartment::discard_enrollment() {
  std::lock_guard lock(mu_);
  if (initialized_) return;
  key_.reset();
  needles_.clear();
}

std::shared_ptr<TlsCompartment::Context> TlsCompartment::find(TlsContextHandle handle) const {
  std::lock_guard lock(mu_);
  auto it = contexts_.find(handle.id);
  return it == contexts_.end() ? nullptr : it->second;
}

void TlsCompartment::capture(ByteView data) {
  if (!options_.capture_egress || data.empty()) return;
  std::lock_guard lock(egress_mu_);
  append(egress_, data);
}

void TlsCompartment::add_needle(Bytes needle) {
  std::lock_guard lock(mu_);
  needles_.push_back(std::move(needle));
}

TlsCompartment::FlushResult TlsCompartment::flush_egress(Context& ctx) {
  uint8_t buf[4096];
  int n;
  while (ctx.wbio && (n = BIO_read(ctx.wbio, buf, sizeof(buf))) > 0) {
    capture({buf, static_cast<size_t>(n)});
    append(ctx.pending_egress, {buf, static_cast<size_t>(n)});
  }
  if (ctx.pending_egress.empty()) return FlushResult::OK;
  if (!ctx.transport.valid()) return FlushResult::FAILED;
  if (!ctx.transport.write_all(view(ctx.pending_egress))) return FlushResult::FAILED;
  ctx.pending_egress.clear();
  return FlushResult::OK;
}

TlsCompartment::FillResult TlsCompartment::fill_ingress(Context& ctx, int wait_ms) {
  if (!ctx.transport.valid()) return FillResult::FAILED;
  if (ctx.transport_eof) return FillResult::CLOSED;
  pollfd pfd{ctx.transport.fd(), POLLIN, 0};
  int pr = ::poll(&pfd, 1, wait_ms);
  if (pr < 0) return FillResult::FAILED;
  if (pr == 0) return FillResult::TIMEOUT;

  uint8_t buf[16384];
  bool added = false;
  for (;;) {
    ssize_t n = ::recv(ctx.transport.fd(), buf, sizeof(buf), MSG_DONTWAIT);
    if (n > 0) {
      BIO_write(ctx.rbio, buf, static_cast<int>(n));
      added = true;
      continue;
    }
    if (n == 0) {
      ctx.transport_eof = true;
      return added ? FillResult::ADDED : FillResult::CLOSED;
    }
    if (errno == EAGAIN || errno == EWOULDBLOCK) break;
    if (errno == EINTR) continue;
    return FillResult::FAILED;
  }
  return added ? FillResult::ADDED : FillResult::TIMEOUT;
}

bool TlsCompartment::handshake(Context& ctx) {
  auto deadline = Clock::now() + std::chrono::milliseconds(options_.handshake_timeout_ms);
  for (;;) {
    int r = SSL_do_handshake(ctx.ssl);
    if (flush_egress(ctx) == FlushResult::FAILED) return false;
    if (r == 1) return true;
    int err = SSL_get_error(ctx.ssl, r);
    if (err != SSL_ERROR_WANT_READ && err != SSL_ERROR_WANT_WRITE) {
      ERR_clear_error();
      return false;
    }
    int wait = remaining_ms(deadline);
    if (wait == 0) return false;
    FillResult fill = fill_ingress(ctx, wait);
    if (fill == FillResult::CLOSED || fill == FillResult::FAILED) return false;
  }
}

TlsContextHandle TlsCompartment::ssl_new_and_connect(net::TcpStream transport) {
  auto ctx = std::make_shared<Context>();
  ctx->transport = std::move(transport);

  TlsContextHandle handle;
  {
    std::lock_guard lock(mu_);
    handle.id = instance_tag_ | next_context_++;
    contexts_[handle.id] = ctx;
  }

  std::lock_guard ctx_lock(ctx->mu);
  Tracer trace(options_.trace_ecalls, &ctx->trace, "ecall_ssl_new_and_connect");

  SSL_CTX* ssl_ctx;
  {
    std::lock_guard lock(mu_);
    ssl_ctx = initialized_ ? ssl_ctx_ : nullptr;
  }
  if (!ssl_ctx || !ctx->transport.valid()) {
    ctx->state = SslState::ERROR;
    ctx->last_error = SslError::SSL_FAILURE;
    return handle;
  }

  ctx->ssl = SSL_new(ssl_ctx);
  ctx->rbio = BIO_new(BIO_s_mem());
  ctx->wbio = BIO_new(BIO_s_mem());
  if (!ctx->ssl || !ctx->rbio || !ctx->wbio) {
    if (ctx->rbio && !ctx->ssl) BIO_free(ctx->rbio);
    if (ctx->wbio && !ctx->ssl) BIO_free(ctx->wbio);
    ctx->state = SslState::ERROR;
    ctx->last_error = SslError::SSL_FAILURE;
    return handle;
  }
  // An empty read BIO must look like "no data yet", not EOF.
  BIO_set_mem_eof_return(ctx->rbio, -1);
  SSL_set_bio(ctx->ssl, ctx->rbio, ctx->wbio);
  SSL_set_connect_state(ctx->ssl);
  ctx->transport.set_nonblocking(true);

  if (!handshake(*ctx)) {
    ctx->state = SslState::ERROR;
    ctx->last_error = SslError::SSL_FAILURE;
    return handle;
  }

  // Policy is enforced by the offered cipher list; verify the outcome too.
  const char* negotiated = SSL_get_cipher_name(ctx->ssl);
  ctx->suite = negotiated ? negotiated : "";
  const char* version = SSL_get_version(ctx->ssl);
  ctx->version = version ? version : "";
  if ((options_.policy.require_ecdhe && !suite_is_ecdhe(ctx->suite)) ||
      (options_.policy.require_aead && !suite_is_aead(ctx->suite))) {
    ctx->state = SslState::ERROR;
    ctx->last_error = SslError::SSL_FAILURE;
    return handle;
  }

  // The session's master secret joins the needle set.
  SSL_SESSION* session = SSL_get_session(ctx->ssl);
  if (session) {
    Bytes master(48);
    size_t len = SSL_SESSION_get_master_key(session, master.data(), master.size());
    master.resize(len);
    if (!master.empty()) add_needle(std::move(master));
  }

  ctx->state = SslState::ESTABLISHED;
  ctx->last_error = SslError::NONE;
  return handle;
}

int TlsCompartment::ssl_write(TlsContextHandle handle, ByteView plaintext) {
  auto ctx = find(handle);
  if (!ctx) return kInvalidHandle;
  std::lock_guard lock(ctx->mu);
  Tracer trace(options_.trace_ecalls, &ctx->trace, "ecall_ssl_write");

  if (ctx->state != SslState::ESTABLISHED) {
    ctx->last_error = SslError::SSL_FAILURE;
    return kBadState;
  }
  if (plaintext.empty()) {
    ctx->last_error = SslError::NONE;
    return 0;
  }

  // The caller's buffer is copied into the compartment before encryption.
  Bytes inside(plaintext.begin(), plaintext.end());
  size_t written = 0;
  int r = SSL_write_ex(ctx->ssl, inside.data(), inside.size(), &written);
  if (r != 1) {
    int err = SSL_get_error(ctx->ssl, r);
    ERR_clear_error();
    if (err == SSL_ERROR_WANT_WRITE || err == SSL_ERROR_WANT_READ) {
      ctx->last_error = SslError::WANT_WRITE;
      return kWouldBlock;
    }
    ctx->state = SslState::ERROR;
    ctx->last_error = err == SSL_ERROR_SYSCALL ? SslError::SYSCALL : SslError::SSL_FAILURE;
    return kFailure;
  }

  switch (flush_egress(*ctx)) {
    case FlushResult::OK: break;
    case FlushResult::BLOCKED:
      ctx->last_error = SslError::WANT_WRITE;
      return kWouldBlock;
    case FlushResult::FAILED:
      ctx->state = SslState::ERROR;
      ctx->last_error = SslError::SYSCALL;
      return kFailure;
  }
  ctx->last_error = SslError::NONE;
  return static_cast<int>(written);
}

std::pair<int, Bytes> TlsCompartment::ssl_read(TlsContextHandle handle, size_t capacity,
                                               int wait_ms) {
  auto ctx = find(handle);
  if (!ctx) return {kInvalidHandle, {}};
  std::lock_guard lock(ctx->mu);
  Tracer trace(options_.trace_ecalls, &ctx->trace, "ecall_ssl_read");

  if (ctx->state == SslState::CLOSED) return {0, {}};
  if (ctx->state != SslState::ESTABLISHED) {
    ctx->last_error = SslError::SSL_FAILURE;
    return {kBadState, {}};
  }
  if (capacity == 0) return {0, {}};

  auto deadline = Clock::now() + std::chrono::milliseconds(wait_ms < 0 ? 0 : wait_ms);
  Bytes out(capacity);
  for (;;) {
    size_t got = 0;
    int r = SSL_read_ex(ctx->ssl, out.data(), out.size(), &got);
    if (r == 1) {
      flush_egress(*ctx);  // any alerts/tickets the engine queued
      out.resize(got);
      capture(view(out));
      ctx->last_error = SslError::NONE;
      return {static_cast<int>(got), std::move(out)};
    }
    int err = SSL_get_error(ctx->ssl, r);
    ERR_clear_error();
    if (err == SSL_ERROR_ZERO_RETURN) {
      // Orderly close; answer it and settle.
      SSL_shutdown(ctx->ssl);
      flush_egress(*ctx);
      ctx->state = SslState::CLOSED;
      ctx->last_error = SslError::NONE;
      return {0, {}};
    }
    if (err != SSL_ERROR_WANT_READ) {
      ctx->state = SslState::ERROR;
      ctx->last_error = err == SSL_ERROR_SYSCALL ? SslError::SYSCALL : SslError::SSL_FAILURE;
      return {kFailure, {}};
    }

    FillResult fill = fill_ingress(*ctx, remaining_ms(deadline));
    if (fill == FillResult::ADDED) continue;
    if (fill == FillResult::TIMEOUT) {
      ctx->last_error = SslError::WANT_READ;
      return {kWouldBlock, {}};
    }
    // Transport vanished without a close_notify.
    ctx->state = SslState::ERROR;
    ctx->last_error = SslError::SYSCALL;
    return {kFailure, {}};
  }
}

std::optional<SslState> TlsCompartment::ssl_get_state(TlsContextHandle handle) const {
  auto ctx = find(handle);
  if (!ctx) return std::nullopt;
  std::lock_guard lock(ctx->mu);
  Tracer trace(options_.trace_ecalls, &ctx->trace, "ecall_ssl_get_state");
  return ctx->state;
}

std::optional<SslError> TlsCompartment::ssl_get_error(TlsContextHandle handle,
                                                      int last_return) const {
  auto ctx = find(handle);
  if (!ctx) return std::nullopt;
  std::lock_guard lock(ctx->mu);
  Tracer trace(options_.trace_ecalls, &ctx->trace, "ecall_ssl_get_error");
  if (last_return >= 0) return SslError::NONE;
  return ctx->last_error;
}

bool TlsCompartment::ssl_free(TlsContextHandle handle) {
  std::shared_ptr<Context> ctx;
  {
    std::lock_guard lock(mu_);
    auto it = contexts_.find(handle.id);
    if (it == contexts_.end()) return false;
    ctx = std::move(it->second);
    contexts_.erase(it);
  }
  std::lock_guard lock(ctx->mu);
  if (ctx->ssl && ctx->state == SslState::ESTABLISHED) {
    SSL_shutdown(ctx->ssl);
    flush_egress(*ctx);
  }
  ctx->transport.close();
  return true;
}

std::vector<TraceRecord> TlsCompartment::boundary_trace(TlsContextHandle handle) const {
  auto ctx = find(handle);
  if (!ctx) return {};
  std::lock_guard lock(ctx->mu);
  return ctx->trace;
}

std::optional<std::string> TlsCompartment::negotiated_suite(TlsContextHandle handle) const {
  auto ctx = find(handle);
  if (!ctx) return std::nullopt;
  std::lock_guard lock(ctx->mu);
  if (ctx->suite.empty()) return std::nullopt;
  return ctx->suite;
}

std::optional<std::string> TlsCompartment::negotiated_version(TlsContextHandle handle) const {
  auto ctx = find(handle);
  if (!ctx) return std::nullopt;
  std::lock_guard lock(ctx->mu);
  if (ctx->version.empty()) return std::nullopt;
  return ctx->version;
}

Bytes TlsCompartment::certificate() const {
  std::lock_guard lock(mu_);
  return certificate_der_;
}

Bytes TlsCompartment::ca_root() const {
  std::lock_guard lock(mu_);
  return ca_root_der_;
}

Bytes TlsCompartment::egress_snapshot() const {
  std::lock_guard lock(egress_mu_);
  return egress_;
}

size_t TlsCompartment::count_secret_occurrences(ByteView haystack) const {
  std::lock_guard lock(mu_);
  size_t count = 0;
  for (const auto& needle : needles_) {
    if (needle.size() < 16 || needle.size() > haystack.size()) continue;
    auto it = haystack.begin();
    for (;;) {
      it = std::search(it, haystack.end(), needle.begin(), needle.end());
      if (it == haystack.end()) break;
      ++count;
      ++it;
    }
  }
  return count;
}

size_t TlsCompartment::secret_needle_count() const {
  std::lock_guard lock(mu_);
  return needles_.size();
}

bool TlsCompartment::scan_positive_control() const {
  Bytes all;
  {
    std::lock_guard lock(mu_);
    if (needles_.empty()) return false;
    for (const auto& needle : needles_) append(all, view(needle));
  }
  return count_secret_occurrences(view(all)) >= 1;
}

}  // namespace trustplane::compartment

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

#include "trustplane/pki.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <stdexcept>

namespace trustplane::pki {

namespace {

struct X509Deleter {
  void operator()(X509* x) const { X509_free(x); }
};
struct ReqDeleter {
  void operator()(X509_REQ* r) const { X509_REQ_free(r); }
};
using CertPtr = std::unique_ptr<X509, X509Deleter>;
using ReqPtr = std::unique_ptr<X509_REQ, ReqDeleter>;

[[noreturn]] void fail(const char* what) {
  throw std::runtime_error(std::string("pki: ") + what);
}

CertPtr parse_cert(const Bytes& der) {
  const unsigned char* p = der.data();
  return CertPtr(d2i_X509(nullptr, &p, static_cast<long>(der.size())));
}

ReqPtr parse_csr(const Bytes& der) {
  const unsigned char* p = der.data();
  return ReqPtr(d2i_X509_REQ(nullptr, &p, static_cast<long>(der.size())));
}

Bytes cert_to_der(X509* x) {
  unsigned char* buf = nullptr;
  int len = i2d_X509(x, &buf);
  if (len <= 0) fail("i2d_X509");
  Bytes out(buf, buf + len);
  OPENSSL_free(buf);
  return out;
}

void set_subject_cn(X509_NAME* name, const std::string& cn) {
  X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                             reinterpret_cast<const unsigned char*>(cn.data()),
                             static_cast<int>(cn.size()), -1, 0);
}

void add_basic_constraints(X509* x, X509* issuer, bool is_ca) {
  X509V3_CTX ctx;
  X509V3_set_ctx_nodb(&ctx);
  X509V3_set_ctx(&ctx, issuer, x, nullptr, nullptr, 0);
  X509_EXTENSION* ext = X509V3_EXT_nconf_nid(nullptr, &ctx, NID_basic_constraints,
                                             is_ca ? "critical,CA:TRUE" : "critical,CA:FALSE");
  if (ext) {
    X509_add_ext(x, ext, -1);
    X509_EXTENSION_free(ext);
  }
}

}  // namespace

void KeyDeleter::operator()(EVP_PKEY* key) const { EVP_PKEY_free(key); }

KeyPtr generate_rsa(int bits) {
  EVP_PKEY* key = EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA", static_cast<size_t>(bits));
  if (!key) fail("RSA keygen");
  return KeyPtr(key);
}

KeyPtr generate_ed25519() {
  EVP_PKEY* key = EVP_PKEY_Q_keygen(nullptr, nullptr, "ED25519");
  if (!key) fail("ed25519 keygen");
  return KeyPtr(key);
}

KeyPtr ed25519_from_seed(ByteView seed32) {
  if (seed32.size() != 32) fail("ed25519 seed must be 32 bytes");
  EVP_PKEY* key =
      EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed32.data(), seed32.size());
  if (!key) fail("ed25519 from seed");
  return KeyPtr(key);
}

KeyPtr ed25519_from_raw_public(ByteView raw32) {
  if (raw32.size() != 32) fail("ed25519 public must be 32 bytes");
  EVP_PKEY* key =
      EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, raw32.data(), raw32.size());
  if (!key) fail("ed25519 from raw public");
  return KeyPtr(key);
}

Bytes ed25519_raw_public(const EVP_PKEY* key) {
  size_t len = 32;
  Bytes out(len);
  if (EVP_PKEY_get_raw_public_key(key, out.data(), &len) != 1 || len != 32)
    fail("raw public export");
  return out;
}

Bytes sign_ed25519(EVP_PKEY* key, ByteView message) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) fail("md ctx");
  Bytes sig(64);
  size_t sig_len = sig.size();
  bool ok = EVP_DigestSignInit(ctx, nullptr, nullptr, nullptr, key) == 1 &&
            EVP_DigestSign(ctx, sig.data(), &sig_len, message.data(), message.size()) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) fail("ed25519 sign");
  sig.resize(sig_len);
  return sig;
}

bool verify_ed25519(EVP_PKEY* public_key, ByteView message, ByteView signature) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) return false;
  bool ok = EVP_DigestVerifyInit(ctx, nullptr, nullptr, nullptr, public_key) == 1 &&
            EVP_DigestVerify(ctx, signature.data(), signature.size(), message.data(),
                             message.size()) == 1;
  EVP_MD_CTX_free(ctx);
  ERR_clear_error();
  return ok;
}

Bytes public_key_der(EVP_PKEY* key) {
  unsigned char* buf = nullptr;
  int len = i2d_PUBKEY(key, &buf);
  if (len <= 0) fail("i2d_PUBKEY");
  Bytes out(buf, buf + len);
  OPENSSL_free(buf);
  return out;
}

Bytes private_key_der_pkcs8(EVP_PKEY* key) {
  PKCS8_PRIV_KEY_INFO* p8 = EVP_PKEY2PKCS8(key);
  if (!p8) fail("pkcs8");
  unsigned char* buf = nullptr;
  int len = i2d_PKCS8_PRIV_KEY_INFO(p8, &buf);
  PKCS8_PRIV_KEY_INFO_free(p8);
  if (len <= 0) fail("i2d pkcs8");
  Bytes out(buf, buf + len);
  OPENSSL_free(buf);
  return out;
}

Bytes private_key_der_pkcs1(EVP_PKEY* rsa_key) {
  unsigned char* buf = nullptr;
  int len = i2d_PrivateKey(rsa_key, &buf);
  if (len <= 0) fail("i2d private");
  Bytes out(buf, buf + len);
  OPENSSL_free(buf);
  return out;
}

std::vector<Bytes> rsa_secret_components(EVP_PKEY* rsa_key) {
  std::vector<Bytes> out;
  for (const char* name : {OSSL_PKEY_PARAM_RSA_D, OSSL_PKEY_PARAM_RSA_FACTOR1,
                           OSSL_PKEY_PARAM_RSA_FACTOR2}) {
    BIGNUM* bn = nullptr;
    if (EVP_PKEY_get_bn_param(rsa_key, name, &bn) != 1 || !bn) continue;
    Bytes component(static_cast<size_t>(BN_num_bytes(bn)));
    BN_bn2bin(bn, component.data());
    BN_clear_free(bn);
    out.push_back(std::move(component));
  }
  return out;
}

Bytes make_self_signed_root(EVP_PKEY* key, const std::string& common_name, int validity_days) {
  CertPtr x(X509_new());
  if (!x) fail("X509_new");
  X509_set_version(x.get(), 2);
  ASN1_INTEGER_set(X509_get_serialNumber(x.get()), 1);
  X509_gmtime_adj(X509_getm_notBefore(x.get()), -3600);
  X509_gmtime_adj(X509_getm_notAfter(x.get()), 86400L * validity_days);
  set_subject_cn(X509_get_subject_name(x.get()), common_name);
  X509_set_issuer_name(x.get(), X509_get_subject_name(x.get()));
  X509_set_pubkey(x.get(), key);
  add_basic_constraints(x.get(), x.get(), /*is_ca=*/true);
  if (X509_sign(x.get(), key, nullptr) <= 0) fail("root sign");
  return cert_to_der(x.get());
}

Bytes make_csr(EVP_PKEY* key, const std::string& common_name) {
  ReqPtr req(X509_REQ_new());
  if (!req) fail("X509_REQ_new");
  X509_REQ_set_version(req.get(), 0);
  set_subject_cn(X509_REQ_get_subject_name(req.get()), common_name);
  X509_REQ_set_pubkey(req.get(), key);
  if (X509_REQ_sign(req.get(), key, EVP_sha256()) <= 0) fail("csr sign");
  unsigned char* buf = nullptr;
  int len = i2d_X509_REQ(req.get(), &buf);
  if (len <= 0) fail("i2d csr");
  Bytes out(buf, buf + len);
  OPENSSL_free(buf);
  return out;
}

bool csr_proof_of_possession_ok(const Bytes& csr_der) {
  ReqPtr req = parse_csr(csr_der);
  if (!req) {
    ERR_clear_error();
    return false;
  }
  KeyPtr pub(X509_REQ_get_pubkey(req.get()));
  bool ok = pub && X509_REQ_verify(req.get(), pub.get()) == 1;
  ERR_clear_error();
  return ok;
}

std::optional<Bytes> sign_csr(const Bytes& csr_der, EVP_PKEY* issuer_key,
                              const Bytes& issuer_cert_der, long validity_seconds,
                              uint64_t serial) {
  ReqPtr req = parse_csr(csr_der);
  if (!req) {
    ERR_clear_error();
    return std::nullopt;
  }
  KeyPtr subject_pub(X509_REQ_get_pubkey(req.get()));
  if (!subject_pub || X509_REQ_verify(req.get(), subject_pub.get()) != 1) {
    ERR_clear_error();
    return std::nullopt;
  }
  CertPtr issuer = parse_cert(issuer_cert_der);
  if (!issuer) fail("issuer cert parse");

  CertPtr x(X509_new());
  if (!x) fail("X509_new");
  X509_set_version(x.get(), 2);
  ASN1_INTEGER_set_uint64(X509_get_serialNumber(x.get()), serial);
  // Backdated notBefore absorbs clock skew between desk hosts.
  X509_gmtime_adj(X509_getm_notBefore(x.get()), -60);
  X509_gmtime_adj(X509_getm_notAfter(x.get()), validity_seconds);
  X509_set_subject_name(x.get(), X509_REQ_get_subject_name(req.get()));
  X509_set_issuer_name(x.get(), X509_get_subject_name(issuer.get()));
  X509_set_pubkey(x.get(), subject_pub.get());
  add_basic_constraints(x.get(), issuer.get(), /*is_ca=*/false);
  if (X509_sign(x.get(), issuer_key, nullptr) <= 0) fail("issue sign");
  return cert_to_der(x.get());
}

bool verify_cert_chain(const Bytes& leaf_der, const Bytes& root_der) {
  CertPtr leaf = parse_cert(leaf_der);
  CertPtr root = parse_cert(root_der);
  if (!leaf || !root) {
    ERR_clear_error();
    return false;
  }
  X509_STORE* store = X509_STORE_new();
  X509_STORE_add_cert(store, root.get());
  X509_STORE_CTX* ctx = X509_STORE_CTX_new();
  X509_STORE_CTX_init(ctx, store, leaf.get(), nullptr);
  bool ok = X509_verify_cert(ctx) == 1;
  X509_STORE_CTX_free(ctx);
  X509_STORE_free(store);
  ERR_clear_error();
  return ok;
}

bool cert_self_signature_ok(const Bytes& cert_der) {
  CertPtr cert = parse_cert(cert_der);
  if (!cert) {
    ERR_clear_error();
    return false;
  }
  KeyPtr pub(X509_get_pubkey(cert.get()));
  bool ok = pub && X509_verify(cert.get(), pub.get()) == 1;
  ERR_clear_error();
  return ok;
}

bool cert_matches_key(const Bytes& cert_der, EVP_PKEY* key) {
  CertPtr cert = parse_cert(cert_der);
  if (!cert) {
    ERR_clear_error();
    return false;
  }
  bool ok = X509_check_private_key(cert.get(), key) == 1;
  ERR_clear_error();
  return ok;
}

std::optional<std::string> cert_subject_cn(const Bytes& cert_der) {
  CertPtr cert = parse_cert(cert_der);
  if (!cert) {
    ERR_clear_error();
    return std::nullopt;
  }
  char buf[256] = {0};
  int n = X509_NAME_get_text_by_NID(X509_get_subject_name(cert.get()), NID_commonName, buf,
                                    sizeof(buf));
  if (n <= 0) return std::nullopt;
  return std::string(buf, static_cast<size_t>(n));
}

}  // namespace trustplane::pki

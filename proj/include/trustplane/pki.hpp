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

#include <memory>
#include <optional>
#include <string>

#include "trustplane/bytes.hpp"

typedef struct evp_pkey_st EVP_PKEY;

namespace trustplane::pki {

struct KeyDeleter {
  void operator()(EVP_PKEY* key) const;
};
using KeyPtr = std::unique_ptr<EVP_PKEY, KeyDeleter>;

KeyPtr generate_rsa(int bits = 2048);
KeyPtr generate_ed25519();
KeyPtr ed25519_from_seed(ByteView seed32);
KeyPtr ed25519_from_raw_public(ByteView raw32);
Bytes ed25519_raw_public(const EVP_PKEY* key);

Bytes sign_ed25519(EVP_PKEY* key, ByteView message);
bool verify_ed25519(EVP_PKEY* public_key, ByteView message, ByteView signature);

// DER encodings. The private forms exist so an owner can fingerprint its own
// secret material; they are never sent anywhere.
Bytes public_key_der(EVP_PKEY* key);
Bytes private_key_der_pkcs8(EVP_PKEY* key);
Bytes private_key_der_pkcs1(EVP_PKEY* rsa_key);
// Raw big-endian secret components of an RSA key (d, p, q).
std::vector<Bytes> rsa_secret_components(EVP_PKEY* rsa_key);

// X.509 (all certificates and CSRs are DER).
Bytes make_self_signed_root(EVP_PKEY* key, const std::string& common_name, int validity_days);
Bytes make_csr(EVP_PKEY* key, const std::string& common_name);

// Proof of possession: the CSR carries a self-signature by the enclosed key.
bool csr_proof_of_possession_ok(const Bytes& csr_der);

// Signs `csr_der` with the issuer credentials. Returns nullopt when the CSR
// is malformed or its self-signature does not verify.
std::optional<Bytes> sign_csr(const Bytes& csr_der, EVP_PKEY* issuer_key,
                              const Bytes& issuer_cert_der, long validity_seconds,
                              uint64_t serial);

bool verify_cert_chain(const Bytes& leaf_der, const Bytes& root_der);
bool cert_self_signature_ok(const Bytes& cert_der);
bool cert_matches_key(const Bytes& cert_der, EVP_PKEY* key);
std::optional<std::string> cert_subject_cn(const Bytes& cert_der);

}  // namespace trustplane::pki

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

#include "trustplane/enrollment.hpp"

#include "trustplane/attestation_agent.hpp"

namespace trustplane::enroll {
namespace {

using Clock = std::chrono::steady_clock;

std::chrono::microseconds since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);
}

}  // namespace

const char* to_string(SessionState state) {
  switch (state) {
    case SessionState::INIT: return "INIT";
    case SessionState::NONCE_RECEIVED: return "NONCE_RECEIVED";
    case SessionState::EVIDENCE_COLLECTED: return "EVIDENCE_COLLECTED";
    case SessionState::KEYED: return "KEYED";
    case SessionState::SUBMITTED: return "SUBMITTED";
    case SessionState::ENROLLED: return "ENROLLED";
    case SessionState::FAILED: return "FAILED";
  }
  return "?";
}

EnrollmentSession run_enrollment(const net::Endpoint& ca_endpoint,
                                 const net::Endpoint& agent_endpoint,
                                 compartment::TlsCompartment& comp, const FaultPlan& faults) {
  EnrollmentSession session;
  auto start = Clock::now();
  auto fail = [&](const std::string& detail, bool transport = false) {
    session.state = SessionState::FAILED;
    session.failure_detail = detail;
    session.transport_failure = transport;
    session.timings.total = since(start);
    comp.discard_enrollment();
    return session;
  };

  // ①② nonce from the CA.
  ca::CaClient ca_client(ca_endpoint);
  auto stage = Clock::now();
  auto nonce = ca_client.request_nonce();
  session.timings.nonce = since(stage);
  if (!nonce) return fail("nonce request failed", true);
  session.nonce = *nonce;
  session.state = SessionState::NONCE_RECEIVED;

  // ③④⑤ quote and measurement list from the local agent.
  agent::AgentClient agent_client(agent_endpoint);
  stage = Clock::now();
  auto evidence = agent_client.request_evidence(session.nonce);
  session.timings.tpm_quote = since(stage);
  if (!evidence) return fail("agent unreachable", true);
  session.quote_bytes = std::move(evidence->quote_bytes);
  session.list_text = std::move(evidence->list_text);
  session.state = SessionState::EVIDENCE_COLLECTED;

  // ⑥ key and CSR, both inside the compartment.
  stage = Clock::now();
  if (!comp.enroll_generate_key()) return fail("key generation refused (already initialized?)");
  session.timings.key_generation = since(stage);
  stage = Clock::now();
  auto csr = comp.enroll_make_csr();
  session.timings.csr_signing = since(stage);
  if (!csr) return fail("CSR creation failed");

  Bytes quote_submitted = session.quote_bytes;
  Bytes csr_submitted = *csr;
  if (faults.flip_quote_sig && !quote_submitted.empty()) quote_submitted.back() ^= 0x01;
  if (faults.corrupt_csr && !csr_submitted.empty()) csr_submitted[csr_submitted.size() / 2] ^= 0x01;

  // ⑦⑧ submission and CA verdict.
  session.state = SessionState::SUBMITTED;
  if (faults.replay_nonce) {
    // First use burns the nonce; the session reports the replay's outcome.
    ca_client.submit(quote_submitted, session.list_text, csr_submitted);
  }
  auto verdict = ca_client.submit(quote_submitted, session.list_text, csr_submitted);
  if (!verdict.transport_ok) return fail("submission transport failed", true);
  if (verdict.reason) {
    session.failure_reason = verdict.reason;
    return fail(std::string("CA rejected: ") + ca::to_string(*verdict.reason));
  }

  // ⑨ certificate (plus the public root) into the compartment.
  auto root = ca_client.fetch_root_certificate();
  if (!root) return fail("root certificate fetch failed", true);
  if (!comp.enroll_install(*verdict.certificate_der, *root))
    return fail("certificate installation failed");

  session.state = SessionState::ENROLLED;
  session.timings.total = since(start);
  return session;
}

std::optional<std::map<std::string, std::chrono::microseconds>> stage_timings(
    const EnrollmentSession& session) {
  if (session.state != SessionState::ENROLLED && session.state != SessionState::FAILED)
    return std::nullopt;
  return std::map<std::string, std::chrono::microseconds>{
      {"nonce", session.timings.nonce},
      {"tpm_quote", session.timings.tpm_quote},
      {"key_generation", session.timings.key_generation},
      {"csr_signing", session.timings.csr_signing},
      {"total", session.timings.total},
  };
}

}  // namespace trustplane::enroll

namespace trustplane::compartment {

// Defined here so the compartment header needs no knowledge of the
// enrollment machinery it delegates to.
InitStatus TlsCompartment::library_init(const net::Endpoint& ca_endpoint,
                                        const net::Endpoint& agent_endpoint) {
  InitStatus status;
  auto start = std::chrono::steady_clock::now();
  if (initialized()) {
    status.detail = "already initialized";
    return status;
  }
  auto session = enroll::run_enrollment(ca_endpoint, agent_endpoint, *this);
  status.elapsed =
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
  if (session.state == enroll::SessionState::ENROLLED) {
    status.ok = true;
    return status;
  }
  if (session.failure_reason)
    status.reject_code = static_cast<uint8_t>(*session.failure_reason);
  status.detail = session.failure_detail.empty() ? "enrollment failed" : session.failure_detail;
  return status;
}

}  // namespace trustplane::compartment

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

#include <map>

#include "trustplane/enclave_tls.hpp"
#include "trustplane/extended_ca.hpp"

namespace trustplane::enroll {

enum class SessionState { INIT, NONCE_RECEIVED, EVIDENCE_COLLECTED, KEYED, SUBMITTED, ENROLLED, FAILED };
const char* to_string(SessionState state);

struct StageTimings {
  std::chrono::microseconds nonce{0};
  std::chrono::microseconds tpm_quote{0};
  std::chrono::microseconds key_generation{0};
  std::chrono::microseconds csr_signing{0};
  std::chrono::microseconds total{0};
};

/// Client-side fault injection for the soundness suite. Faults corrupt the
/// submission only; the host and compartment stay honest.
struct FaultPlan {
  bool flip_quote_sig = false;  // flip the quote's final signature byte
  bool replay_nonce = false;    // submit twice; report the second outcome
  bool corrupt_csr = false;     // flip a byte inside the CSR
};

struct EnrollmentSession {
  SessionState state = SessionState::INIT;
  Nonce32 nonce{};
  Bytes quote_bytes;      // evidence as received from the agent
  std::string list_text;  // ditto
  std::optional<ca::RejectReason> failure_reason;
  std::string failure_detail;
  bool transport_failure = false;
  StageTimings timings;
};

/// Runs the enrollment sequence in order: nonce from the CA, evidence from
/// the local agent, key + CSR generated inside the compartment, submission,
/// certificate installation. Any step failure yields FAILED and leaves the
/// compartment without credentials (re-initializable).
EnrollmentSession run_enrollment(const net::Endpoint& ca_endpoint,
                                 const net::Endpoint& agent_endpoint,
                                 compartment::TlsCompartment& comp,
                                 const FaultPlan& faults = {});

/// Per-stage durations of a finished session; nullopt while in progress.
std::optional<std::map<std::string, std::chrono::microseconds>> stage_timings(
    const EnrollmentSession& session);

}  // namespace trustplane::enroll

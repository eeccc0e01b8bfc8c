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

#include <cstdint>
#include <mutex>
#include <optional>

#include "trustplane/bytes.hpp"

namespace trustplane {

/// Process-wide source of artifact-level randomness (nonces, payload
/// patterns, transaction ids). When a seed is set, either explicitly or via
/// the TRUSTPLANE_SEED environment variable, the stream is a deterministic
/// hash counter so runs are reproducible; values remain unique within a run.
/// Key generation and TLS handshake randomness are not routed through here.
class RandomSource {
 public:
  static RandomSource& instance();

  void set_seed(uint64_t seed);
  void clear_seed();
  bool seeded() const;

  void fill(std::span<uint8_t> out);
  Nonce32 nonce32();
  uint64_t next_u64();

 private:
  RandomSource();

  mutable std::mutex mu_;
  std::optional<uint64_t> seed_;
  uint64_t counter_ = 0;
};

}  // namespace trustplane

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

#include "trustplane/rng.hpp"

#include <openssl/rand.h>

#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "trustplane/digest.hpp"

namespace trustplane {

RandomSource& RandomSource::instance() {
  static RandomSource source;
  return source;
}

RandomSource::RandomSource() {
  if (const char* env = std::getenv("TRUSTPLANE_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') seed_ = static_cast<uint64_t>(v);
  }
}

void RandomSource::set_seed(uint64_t seed) {
  std::lock_guard lock(mu_);
  seed_ = seed;
  counter_ = 0;
}

void RandomSource::clear_seed() {
  std::lock_guard lock(mu_);
  seed_.reset();
  counter_ = 0;
}

bool RandomSource::seeded() const {
  std::lock_guard lock(mu_);
  return seed_.has_value();
}

void RandomSource::fill(std::span<uint8_t> out) {
  std::lock_guard lock(mu_);
  if (!seed_) {
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
      throw std::runtime_error("system RNG failure");
    return;
  }
  // Counter-mode hash stream: block i = H(seed || counter).
  size_t off = 0;
  while (off < out.size()) {
    Bytes block_input(16);
    std::memcpy(block_input.data(), &*seed_, 8);
    uint64_t c = counter_++;
    std::memcpy(block_input.data() + 8, &c, 8);
    Digest32 block = sha256(view(block_input));
    size_t take = std::min(out.size() - off, block.size());
    std::memcpy(out.data() + off, block.data(), take);
    off += take;
  }
}

Nonce32 RandomSource::nonce32() {
  Nonce32 out{};
  fill(out);
  return out;
}

uint64_t RandomSource::next_u64() {
  uint64_t v = 0;
  std::array<uint8_t, 8> buf{};
  fill(buf);
  std::memcpy(&v, buf.data(), 8);
  return v;
}

}  // namespace trustplane

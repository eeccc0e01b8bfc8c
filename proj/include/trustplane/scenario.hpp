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

#include <string>
#include <vector>

#include "trustplane/extended_ca.hpp"
#include "trustplane/net.hpp"

namespace trustplane::scenario {

/// Flat key/value deployment description. Lines are `key value...`; `#`
/// starts a comment. Unknown keys are an error so typos surface early.
struct ScenarioConfig {
  net::Endpoint ca_endpoint{"127.0.0.1", 0};
  net::Endpoint ca_admin_endpoint{"127.0.0.1", 0};
  net::Endpoint agent_endpoint{"127.0.0.1", 0};
  std::string known_good_path;

  std::optional<Bytes> root_seed;      // 32 bytes, hex in the file
  std::optional<Bytes> identity_seed;  // 32 bytes, hex in the file

  // Objects the host measures at bring-up: real files, or inline content
  // (`measure_inline <path> <hex>`), checked in file order.
  std::vector<std::string> measure_files;
  std::vector<std::pair<std::string, Bytes>> measure_inline;

  size_t bench_size_from = 64;
  size_t bench_size_to = 1408;
  size_t bench_size_step = 64;
  int bench_rate = 500;
  int bench_count = 200;
  double bench_cutoff_ms = 2.5;
  int bench_keygen_iters = 50;
  int bench_attest_iters = 20;
  std::string bench_out;  // directory for report files; empty = stdout only

  static std::optional<ScenarioConfig> parse(const std::string& text, std::string* error);
  static std::optional<ScenarioConfig> load(const std::string& path, std::string* error);

  // The measured set as (path, content) pairs; reads measure_files from disk.
  std::optional<std::vector<std::pair<std::string, std::string>>> measured_objects(
      std::string* error) const;
};

/// Parses `A:B:STEP` into an inclusive size sweep.
std::optional<std::vector<size_t>> parse_size_sweep(const std::string& text);

}  // namespace trustplane::scenario

namespace trustplane::ca {

// Known-good state as a text file: `measurement_pcr N`, `allow <hex32>`,
// `require <path>`, `trust_key <keyid_hex8> <pub_hex32>`.
std::string serialize_known_good(const KnownGoodConfig& config);
std::optional<KnownGoodConfig> parse_known_good(const std::string& text, std::string* error);
bool save_known_good(const KnownGoodConfig& config, const std::string& path);
std::optional<KnownGoodConfig> load_known_good(const std::string& path, std::string* error);

}  // namespace trustplane::ca

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

#include "trustplane/scenario.hpp"

#include <fstream>
#include <sstream>

namespace trustplane::scenario {
namespace {

std::vector<std::string> split_tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool set_error(std::string* error, size_t line_no, const std::string& message) {
  if (error) *error = "line " + std::to_string(line_no) + ": " + message;
  return false;
}

}  // namespace

std::optional<std::vector<size_t>> parse_size_sweep(const std::string& text) {
  std::istringstream in(text);
  size_t from = 0, to = 0, step = 0;
  char c1 = 0, c2 = 0;
  if (!(in >> from >> c1 >> to >> c2 >> step) || c1 != ':' || c2 != ':') return std::nullopt;
  if (in.peek() != EOF || step == 0 || from == 0 || to < from) return std::nullopt;
  std::vector<size_t> sizes;
  for (size_t s = from; s <= to; s += step) sizes.push_back(s);
  return sizes;
}

std::optional<ScenarioConfig> ScenarioConfig::parse(const std::string& text, std::string* error) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;

  auto parse_seed = [](const std::string& hex) -> std::optional<Bytes> {
    auto bytes = from_hex(hex);
    if (!bytes || bytes->size() != 32) return std::nullopt;
    return bytes;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto tokens = split_tokens(line);
    if (tokens.empty()) continue;
    const std::string& key = tokens[0];
    const size_t argc = tokens.size() - 1;

    auto want = [&](size_t n) {
      if (argc == n) return true;
      set_error(error, line_no, key + " expects " + std::to_string(n) + " value(s)");
      return false;
    };
    auto as_int = [&](const std::string& token, int min_value, int& out) {
      try {
        size_t used = 0;
        int v = std::stoi(token, &used);
        if (used != token.size() || v < min_value) return false;
        out = v;
        return true;
      } catch (...) {
        return false;
      }
    };

    if (key == "ca_endpoint" || key == "ca_admin_endpoint" || key == "agent_endpoint") {
      if (!want(1)) return std::nullopt;
      auto ep = net::Endpoint::parse(tokens[1]);
      if (!ep) {
        set_error(error, line_no, "bad endpoint '" + tokens[1] + "'");
        return std::nullopt;
      }
      (key == "ca_endpoint"         ? cfg.ca_endpoint
       : key == "ca_admin_endpoint" ? cfg.ca_admin_endpoint
                                    : cfg.agent_endpoint) = *ep;
    } else if (key == "known_good") {
      if (!want(1)) return std::nullopt;
      cfg.known_good_path = tokens[1];
    } else if (key == "root_seed" || key == "identity_seed") {
      if (!want(1)) return std::nullopt;
      auto seed = parse_seed(tokens[1]);
      if (!seed) {
        set_error(error, line_no, key + " must be 32 bytes of hex");
        return std::nullopt;
      }
      (key == "root_seed" ? cfg.root_seed : cfg.identity_seed) = std::move(*seed);
    } else if (key == "measure") {
      if (!want(1)) return std::nullopt;
      cfg.measure_files.push_back(tokens[1]);
    } else if (key == "measure_inline") {
      if (!want(2)) return std::nullopt;
      auto content = from_hex(tokens[2]);
      if (!content) {
        set_error(error, line_no, "measure_inline content must be hex");
        return std::nullopt;
      }
      cfg.measure_inline.emplace_back(tokens[1], std::move(*content));
    } else if (key == "bench_sizes") {
      if (!want(1)) return std::nullopt;
      auto sweep = parse_size_sweep(tokens[1]);
      if (!sweep) {
        set_error(error, line_no, "bench_sizes must be FROM:TO:STEP");
        return std::nullopt;
      }
      std::istringstream sw(tokens[1]);
      char colon;
      sw >> cfg.bench_size_from >> colon >> cfg.bench_size_to >> colon >> cfg.bench_size_step;
    } else if (key == "bench_rate" || key == "bench_count" || key == "bench_keygen_iters" ||
               key == "bench_attest_iters") {
      if (!want(1)) return std::nullopt;
      int value = 0;
      if (!as_int(tokens[1], 1, value)) {
        set_error(error, line_no, key + " must be a positive integer");
        return std::nullopt;
      }
      (key == "bench_rate"           ? cfg.bench_rate
       : key == "bench_count"        ? cfg.bench_count
       : key == "bench_keygen_iters" ? cfg.bench_keygen_iters
                                     : cfg.bench_attest_iters) = value;
    } else if (key == "bench_cutoff_ms") {
      if (!want(1)) return std::nullopt;
      try {
        cfg.bench_cutoff_ms = std::stod(tokens[1]);
      } catch (...) {
        set_error(error, line_no, "bench_cutoff_ms must be a number");
        return std::nullopt;
      }
      if (cfg.bench_cutoff_ms <= 0) {
        set_error(error, line_no, "bench_cutoff_ms must be positive");
        return std::nullopt;
      }
    } else if (key == "bench_out") {
      if (!want(1)) return std::nullopt;
      cfg.bench_out = tokens[1];
    } else {
      set_error(error, line_no, "unknown key '" + key + "'");
      return std::nullopt;
    }
  }
  return cfg;
}

std::optional<ScenarioConfig> ScenarioConfig::load(const std::string& path, std::string* error) {
  auto text = slurp(path);
  if (!text) {
    if (error) *error = "cannot read " + path;
    return std::nullopt;
  }
  return parse(*text, error);
}

std::optional<std::vector<std::pair<std::string, std::string>>> ScenarioConfig::measured_objects(
    std::string* error) const {
  std::vector<std::pair<std::string, std::string>> objects;
  for (const auto& path : measure_files) {
    auto content = slurp(path);
    if (!content) {
      if (error) *error = "cannot read measured file " + path;
      return std::nullopt;
    }
    objects.emplace_back(path, std::move(*content));
  }
  for (const auto& [path, content] : measure_inline)
    objects.emplace_back(path, std::string(content.begin(), content.end()));
  return objects;
}

}  // namespace trustplane::scenario

namespace trustplane::ca {

std::string serialize_known_good(const KnownGoodConfig& config) {
  std::ostringstream out;
  out << "measurement_pcr " << config.measurement_pcr << '\n';
  for (const auto& digest : config.allowed_template_digests)
    out << "allow " << to_hex(view(digest)) << '\n';
  for (const auto& path : config.required_paths) out << "require " << path << '\n';
  for (const auto& [key_id, public_key] : config.trusted_attestation_keys)
    out << "trust_key " << to_hex(view(key_id)) << ' ' << to_hex(view(public_key)) << '\n';
  return out.str();
}

std::optional<KnownGoodConfig> parse_known_good(const std::string& text, std::string* error) {
  KnownGoodConfig config;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  auto fail = [&](const std::string& message) {
    if (error) *error = "line " + std::to_string(line_no) + ": " + message;
    return std::nullopt;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto tokens = scenario::split_tokens(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "measurement_pcr" && tokens.size() == 2) {
      try {
        config.measurement_pcr = std::stoi(tokens[1]);
      } catch (...) {
        return fail("bad register index");
      }
      if (config.measurement_pcr < 0 || config.measurement_pcr >= measurement::kPcrCount)
        return fail("register index out of range");
    } else if (tokens[0] == "allow" && tokens.size() == 2) {
      auto digest = array_from_hex<32>(tokens[1]);
      if (!digest) return fail("allow value must be 32 bytes of hex");
      config.allowed_template_digests.insert(*digest);
    } else if (tokens[0] == "require" && tokens.size() == 2) {
      config.required_paths.insert(tokens[1]);
    } else if (tokens[0] == "trust_key" && tokens.size() == 3) {
      auto key_id = array_from_hex<8>(tokens[1]);
      auto public_key = from_hex(tokens[2]);
      if (!key_id || !public_key || public_key->size() != 32)
        return fail("trust_key wants an 8-byte id and a 32-byte key, hex");
      config.trusted_attestation_keys[*key_id] = std::move(*public_key);
    } else {
      return fail("unrecognized entry '" + tokens[0] + "'");
    }
  }
  return config;
}

bool save_known_good(const KnownGoodConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return false;
  out << serialize_known_good(config);
  return static_cast<bool>(out);
}

std::optional<KnownGoodConfig> load_known_good(const std::string& path, std::string* error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (error) *error = "cannot read " + path;
    return std::nullopt;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_known_good(buf.str(), error);
}

}  // namespace trustplane::ca

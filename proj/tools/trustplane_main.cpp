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

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "trustplane/bench.hpp"
#include "trustplane/digest.hpp"
#include "trustplane/scenario.hpp"

namespace {

using namespace trustplane;

// Exit codes: 0 enrolled / benchmark done, 1 usage or setup problem,
// 10..16 CA rejection (9 + reason code), 20 transport failure.
constexpr int kExitSetup = 1;
constexpr int kExitRejectBase = 9;
constexpr int kExitTransport = 20;

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

std::vector<std::pair<std::string, std::string>> default_measured() {
  return {
      {"/opt/sdn/vswitchd", "vswitchd binary image v1"},
      {"/opt/sdn/switch.conf", "port-count=3 controller=tls"},
  };
}

std::optional<scenario::ScenarioConfig> load_config(const std::string& path) {
  std::string error;
  auto cfg = scenario::ScenarioConfig::load(path, &error);
  if (!cfg) std::cerr << "config: " << error << "\n";
  return cfg;
}

std::optional<std::vector<std::pair<std::string, std::string>>> resolve_measured(
    const scenario::ScenarioConfig& cfg) {
  std::string error;
  auto objects = cfg.measured_objects(&error);
  if (!objects) {
    std::cerr << "config: " << error << "\n";
    return std::nullopt;
  }
  if (objects->empty()) *objects = default_measured();
  return objects;
}

std::unique_ptr<agent::SimulatedHost> build_host(
    const scenario::ScenarioConfig& cfg,
    const std::vector<std::pair<std::string, std::string>>& objects, bool tamper_measurement) {
  agent::SimulatedHost::Options options;
  options.identity_seed = cfg.identity_seed;
  auto host = std::make_unique<agent::SimulatedHost>(options);
  for (const auto& [path, content] : objects) host->measure_content(path, view(content));
  if (tamper_measurement) {
    std::string implant = "injected implant";
    host->measure_content("/opt/sdn/rogue", view(implant));
  }
  return host;
}

ca::KnownGoodConfig derive_known_good(
    const std::vector<std::pair<std::string, std::string>>& objects,
    const agent::SimulatedHost& host) {
  ca::KnownGoodConfig known_good;
  known_good.trusted_attestation_keys[host.identity().key_id()] = host.identity().public_key_raw();
  for (const auto& [path, content] : objects) {
    known_good.allowed_template_digests.insert(
        measurement::template_digest_for(path, sha256(view(content))));
    known_good.required_paths.insert(path);
  }
  return known_good;
}

void wait_for_signal() {
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

int cmd_gen_known_good(const std::string& config_path, std::string out_path) {
  auto cfg = load_config(config_path);
  if (!cfg) return kExitSetup;
  if (out_path.empty()) out_path = cfg->known_good_path;
  if (out_path.empty()) {
    std::cerr << "no output path: pass --out or set known_good in the config\n";
    return kExitSetup;
  }
  auto objects = resolve_measured(*cfg);
  if (!objects) return kExitSetup;
  auto host = build_host(*cfg, *objects, false);
  if (!ca::save_known_good(derive_known_good(*objects, *host), out_path)) {
    std::cerr << "cannot write " << out_path << "\n";
    return kExitSetup;
  }
  std::cout << "known-good written to " << out_path << "\n";
  return 0;
}

int cmd_serve_ca(const std::string& config_path) {
  auto cfg = load_config(config_path);
  if (!cfg) return kExitSetup;
  if (cfg->known_good_path.empty()) {
    std::cerr << "serve-ca requires known_good in the config\n";
    return kExitSetup;
  }
  std::string error;
  auto known_good = ca::load_known_good(cfg->known_good_path, &error);
  if (!known_good) {
    std::cerr << "known-good: " << error << "\n";
    return kExitSetup;
  }
  ca::CaOptions options;
  options.root_seed = cfg->root_seed;
  ca::CertificateAuthority authority(std::move(*known_good), options);
  ca::CaServer server(authority, cfg->ca_endpoint, cfg->ca_admin_endpoint);
  if (!server.start()) {
    std::cerr << "cannot bind " << cfg->ca_endpoint.str() << " / "
              << cfg->ca_admin_endpoint.str() << "\n";
    return kExitSetup;
  }
  std::cout << "ca listening main=" << server.main_endpoint().str()
            << " admin=" << server.admin_endpoint().str() << std::endl;
  wait_for_signal();
  server.stop();
  return 0;
}

int cmd_serve_agent(const std::string& config_path, bool tamper_measurement) {
  auto cfg = load_config(config_path);
  if (!cfg) return kExitSetup;
  auto objects = resolve_measured(*cfg);
  if (!objects) return kExitSetup;
  auto host = build_host(*cfg, *objects, tamper_measurement);
  agent::AgentConfig agent_config;
  agent_config.bound_endpoint = cfg->agent_endpoint;
  agent::AttestationAgent agent(*host, agent_config);
  if (!agent.start()) {
    std::cerr << "cannot bind " << cfg->agent_endpoint.str() << " (loopback only)\n";
    return kExitSetup;
  }
  std::cout << "agent listening " << agent.endpoint().str() << std::endl;
  wait_for_signal();
  agent.stop();
  return 0;
}

int report_enrollment(const enroll::EnrollmentSession& session) {
  std::cout << "state " << enroll::to_string(session.state) << "\n";
  if (session.failure_reason)
    std::cout << "reason " << ca::to_string(*session.failure_reason) << "\n";
  if (!session.failure_detail.empty()) std::cout << "detail " << session.failure_detail << "\n";
  if (auto timings = enroll::stage_timings(session)) {
    for (const char* stage : {"nonce", "tpm_quote", "key_generation", "csr_signing", "total"})
      std::cout << stage << "_us " << (*timings)[stage].count() << "\n";
  }
  if (session.state == enroll::SessionState::ENROLLED) return 0;
  if (session.failure_reason)
    return kExitRejectBase + static_cast<int>(*session.failure_reason);
  if (session.transport_failure) return kExitTransport;
  return kExitSetup;
}

int cmd_enroll(const std::string& config_path, const std::string& tamper, bool remote) {
  auto cfg = load_config(config_path);
  if (!cfg) return kExitSetup;
  enroll::FaultPlan faults;
  faults.flip_quote_sig = tamper == "quote-sig";
  faults.replay_nonce = tamper == "nonce-replay";
  faults.corrupt_csr = tamper == "csr";

  if (remote) {
    if (tamper == "measurement") {
      std::cerr << "measurement tamper happens on the host: restart serve-agent with "
                   "--tamper-measurement instead\n";
      return kExitSetup;
    }
    compartment::TlsCompartment comp;
    auto session = enroll::run_enrollment(cfg->ca_endpoint, cfg->agent_endpoint, comp, faults);
    return report_enrollment(session);
  }

  auto objects = resolve_measured(*cfg);
  if (!objects) return kExitSetup;
  harness::Testbed::Options options;
  options.measured = *objects;
  options.identity_seed = cfg->identity_seed;
  options.root_seed = cfg->root_seed;
  options.tamper_unknown_measurement = tamper == "measurement";
  harness::Testbed testbed(std::move(options));
  std::string error;
  if (!testbed.start_services(&error)) {
    std::cerr << "services: " << error << "\n";
    return kExitSetup;
  }
  return report_enrollment(testbed.enroll(faults));
}

int cmd_bench(const std::string& config_path, const std::string& sizes_arg, int rate, int count,
              double cutoff_ms, bool trace_ecalls) {
  auto cfg = load_config(config_path);
  if (!cfg) return kExitSetup;
  bench::BenchConfig bench_config;
  std::string sweep_text = sizes_arg.empty()
                               ? std::to_string(cfg->bench_size_from) + ":" +
                                     std::to_string(cfg->bench_size_to) + ":" +
                                     std::to_string(cfg->bench_size_step)
                               : sizes_arg;
  auto sizes = scenario::parse_size_sweep(sweep_text);
  if (!sizes) {
    std::cerr << "bad size sweep '" << sweep_text << "' (want FROM:TO:STEP)\n";
    return kExitSetup;
  }
  bench_config.sizes = *sizes;
  bench_config.rate_pps = rate > 0 ? rate : cfg->bench_rate;
  bench_config.count = count > 0 ? count : cfg->bench_count;
  bench_config.cutoff_ms = cutoff_ms > 0 ? cutoff_ms : cfg->bench_cutoff_ms;
  bench_config.keygen_iters = cfg->bench_keygen_iters;
  bench_config.attest_iters = cfg->bench_attest_iters;
  bench_config.trace_ecalls = trace_ecalls;
  bench_config.identity_seed = cfg->identity_seed;
  bench_config.root_seed = cfg->root_seed;
  auto objects = resolve_measured(*cfg);
  if (!objects) return kExitSetup;
  bench_config.measured = *objects;

  std::string error;
  auto reports = bench::run_benchmarks(bench_config, &error);
  if (!reports) {
    std::cerr << "bench: " << error << "\n";
    return kExitSetup;
  }

  auto emit = [&](const std::string& name, const std::string& text) {
    if (text.empty()) return true;
    std::cout << "== " << name << " ==\n" << text;
    if (cfg->bench_out.empty()) return true;
    std::error_code ec;
    std::filesystem::create_directories(cfg->bench_out, ec);
    std::ofstream out(std::filesystem::path(cfg->bench_out) / (name + ".txt"),
                      std::ios::binary | std::ios::trunc);
    out << text;
    return static_cast<bool>(out);
  };
  bool wrote = emit("latency", reports->latency_text);
  wrote = emit("key_generation", reports->keygen_text) && wrote;
  wrote = emit("attestation", reports->attestation_text) && wrote;
  wrote = emit("enclave_access", reports->ecall_text) && wrote;
  std::cout << "packets_sent " << reports->packets_sent << "\n";
  std::cout << "packets_received " << reports->packets_received << "\n";
  std::cout << "wall_seconds " << reports->wall_seconds << "\n";
  if (!wrote) {
    std::cerr << "could not write reports under " << cfg->bench_out << "\n";
    return kExitSetup;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  install_signal_handlers();
  CLI::App app{"attestation-gated enrollment and TLS-compartment benchmark harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string tamper = "none";
  std::string sizes_arg;
  int rate = 0;
  int count = 0;
  double cutoff_ms = 0;
  bool trace_ecalls = false;
  bool remote = false;
  bool tamper_measurement = false;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "scenario config file")->required();
  };

  auto* gen = app.add_subcommand("gen-known-good",
                                 "derive the known-good list from the configured measured set");
  add_config(gen);
  gen->add_option("--out", out_path, "output path (default: the config's known_good)");

  auto* serve_ca = app.add_subcommand("serve-ca", "run the enrollment CA until SIGINT");
  add_config(serve_ca);

  auto* serve_agent = app.add_subcommand("serve-agent", "run the local attestation agent");
  add_config(serve_agent);
  serve_agent->add_flag("--tamper-measurement", tamper_measurement,
                        "measure an implant outside the known-good set");

  auto* enroll_cmd = app.add_subcommand("enroll", "enroll a fresh TLS compartment");
  add_config(enroll_cmd);
  enroll_cmd
      ->add_option("--tamper", tamper, "fault to inject during enrollment")
      ->check(CLI::IsMember({"none", "measurement", "quote-sig", "nonce-replay", "csr"}));
  enroll_cmd->add_flag("--remote", remote,
                       "use the CA/agent endpoints from the config instead of in-process services");

  auto* bench_cmd = app.add_subcommand("bench", "run the benchmark suite on an in-process deployment");
  add_config(bench_cmd);
  bench_cmd->add_option("--sizes", sizes_arg, "frame size sweep FROM:TO:STEP");
  bench_cmd->add_option("--rate", rate, "send rate, packets per second");
  bench_cmd->add_option("--count", count, "packets per size");
  bench_cmd->add_option("--cutoff-ms", cutoff_ms, "outlier cutoff in milliseconds");
  bench_cmd->add_flag("--trace-ecalls", trace_ecalls, "emit the per-call boundary table");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) return cmd_gen_known_good(config_path, out_path);
  if (serve_ca->parsed()) return cmd_serve_ca(config_path);
  if (serve_agent->parsed()) return cmd_serve_agent(config_path, tamper_measurement);
  if (enroll_cmd->parsed()) return cmd_enroll(config_path, tamper, remote);
  if (bench_cmd->parsed()) return cmd_bench(config_path, sizes_arg, rate, count, cutoff_ms, trace_ecalls);
  return kExitSetup;
}

// Copyright 2026 The emrp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Protocol peer that answers every request with the surrogate SDR of the
// architecture it was sent. Used to exercise the worker client without a
// training backend. Fault injection flags simulate misbehaving workers.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "emrp/fitness.hpp"
#include "emrp/phenotype.hpp"
#include "emrp/protocol.hpp"

namespace {

// Requests seen so far across restarts, read from the call log.
std::size_t previous_calls(const std::string& path) {
  if (path.empty()) return 0;
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

void reply(const emrp::Message& m) {
  std::cout << emrp::encode_message(m) << '\n' << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Echo-mode fitness worker"};
  std::string fail_mode = "none";
  std::size_t fail_after = 0;
  std::size_t fail_count = 0;
  int delay_ms = 0;
  std::string call_log;
  app.add_option("--fail-mode", fail_mode, "Fault to inject")
      ->check(CLI::IsMember({"none", "mismatch-id", "hang", "crash", "garbage", "error", "bad-hello"}));
  app.add_option("--fail-after", fail_after, "Requests answered normally before faults start");
  app.add_option("--fail-count", fail_count, "Faulty requests before recovering (0 = forever)");
  app.add_option("--delay-ms", delay_ms, "Sleep before each reply");
  app.add_option("--call-log", call_log, "Append one line per request; counts survive restarts");
  CLI11_PARSE(app, argc, argv);

  std::string line;
  while (std::getline(std::cin, line)) {
    emrp::Message msg;
    try {
      msg = emrp::decode_message(line);
    } catch (const emrp::ProtocolError& e) {
      reply(emrp::FitnessResult{std::nullopt, emrp::ResultStatus::error, 0.0, e.what()});
      continue;
    }
    if (std::holds_alternative<emrp::Shutdown>(msg)) return 0;
    if (std::holds_alternative<emrp::Hello>(msg)) {
      emrp::Hello h{emrp::kProtocolVersion, "emrp-echo", {"echo"}};
      if (fail_mode == "bad-hello") h.protocol = "emrp-fitness/0";
      reply(h);
      continue;
    }
    auto* req = std::get_if<emrp::FitnessRequest>(&msg);
    if (req == nullptr) {
      reply(emrp::FitnessResult{std::nullopt, emrp::ResultStatus::error, 0.0, "unexpected message"});
      continue;
    }

    const std::size_t call = previous_calls(call_log);
    if (!call_log.empty()) {
      std::ofstream(call_log, std::ios::app) << req->request_id << ' ' << emrp::to_string(req->split)
                                             << '\n';
    }
    if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));

    const bool faulty = fail_mode != "none" && fail_mode != "bad-hello" && call >= fail_after &&
                        (fail_count == 0 || call < fail_after + fail_count);
    if (faulty) {
      if (fail_mode == "crash") std::_Exit(3);
      if (fail_mode == "hang") {
        for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
      }
      if (fail_mode == "garbage") {
        std::cout << "this is not json\n" << std::flush;
        continue;
      }
      if (fail_mode == "error") {
        reply(emrp::FitnessResult{req->request_id, emrp::ResultStatus::error, 0.0, "injected failure"});
        continue;
      }
    }

    emrp::FitnessResult result;
    result.request_id = req->request_id;
    try {
      const emrp::ArchitectureSpec arch = emrp::parse_architecture_message(req->architecture);
      result.mean_sdr_db = emrp::surrogate_sdr(arch);
      result.diagnostics = fmt::format("echo params={}", emrp::count_params(arch));
    } catch (const std::exception& e) {
      result.status = emrp::ResultStatus::error;
      result.diagnostics = e.what();
    }
    if (faulty && fail_mode == "mismatch-id") result.request_id = req->request_id + 1000;
    reply(result);
  }
  return 0;
}

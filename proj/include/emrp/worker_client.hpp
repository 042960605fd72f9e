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

#ifndef EMRP_WORKER_CLIENT_HPP_
#define EMRP_WORKER_CLIENT_HPP_

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emrp/fitness.hpp"
#include "emrp/protocol.hpp"

namespace emrp {

// Environment variable that replaces the worker executable path.
inline constexpr const char* kWorkerEnvVar = "EMRP_WORKER";

struct WorkerOptions {
  std::vector<std::string> command;  // argv of the worker process
  int train_iterations = kDefaultTrainIterations;
  int batch_size = kDefaultBatchSize;
  std::uint64_t rng_seed = 0;
  // Per-request timeout: max(floor, multiplier * median of completed
  // requests); initial_timeout_s before any request has completed.
  double initial_timeout_s = 3600.0;
  double timeout_floor_s = 60.0;
  double timeout_multiplier = 10.0;
  std::optional<double> fixed_timeout_s;  // overrides the rule above
  int max_attempts = 2;                   // first try plus one retry

  friend bool operator==(const WorkerOptions&, const WorkerOptions&) = default;
};

// Applies the EMRP_WORKER override to command[0].
std::vector<std::string> resolve_worker_command(std::vector<std::string> command);

// A child process with piped stdin/stdout. Killed and reaped on destruction.
class WorkerProcess {
 public:
  explicit WorkerProcess(const std::vector<std::string>& argv);
  ~WorkerProcess();
  WorkerProcess(const WorkerProcess&) = delete;
  WorkerProcess& operator=(const WorkerProcess&) = delete;

  void write_line(std::string_view line);
  // Next line without its newline; nullopt when the deadline passes first.
  // Throws EvaluationError once the child has closed its stdout.
  std::optional<std::string> read_line(std::chrono::steady_clock::time_point deadline);
  void terminate();
  pid_t pid() const { return pid_; }

 private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

// Speaks the fitness protocol to one worker process, starting it lazily.
class WorkerClient {
 public:
  explicit WorkerClient(WorkerOptions options);

  Hello handshake();
  // Single attempt. Throws EvaluationError on timeout, crash, malformed or
  // mismatched replies and error results; the worker is stopped afterwards.
  FitnessResult remote_evaluate(const FitnessRequest& request);
  void stop();

  std::chrono::duration<double> current_timeout() const;
  std::uint64_t requests_sent() const { return requests_sent_; }
  const WorkerOptions& options() const { return options_; }

 private:
  void ensure_started();

  WorkerOptions options_;
  std::unique_ptr<WorkerProcess> process_;
  std::optional<Hello> hello_;
  std::vector<double> durations_s_;
  std::uint64_t requests_sent_ = 0;
};

// Evaluator backed by a training worker. Params are computed locally.
class WorkerEvaluator final : public Evaluator {
 public:
  explicit WorkerEvaluator(WorkerOptions options, GenomeLayout layout = {});

  Objectives evaluate(const Genome& genome, Split split) override;
  std::string identity() const override;

  WorkerClient& client() { return client_; }

 private:
  WorkerClient client_;
  GenomeLayout layout_;
  std::uint64_t next_request_id_ = 1;
};

}  // namespace emrp

#endif  // EMRP_WORKER_CLIENT_HPP_

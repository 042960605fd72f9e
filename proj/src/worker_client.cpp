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

#include "emrp/worker_client.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>

#include <fmt/format.h>

extern char** environ;

namespace emrp {

std::vector<std::string> resolve_worker_command(std::vector<std::string> command) {
  const char* env = std::getenv(kWorkerEnvVar);
  if (env != nullptr && *env != '\0') {
    if (command.empty()) {
      command.emplace_back(env);
    } else {
      command[0] = env;
    }
  }
  return command;
}

// WorkerProcess

WorkerProcess::WorkerProcess(const std::vector<std::string>& argv) {
  if (argv.empty()) throw EvaluationError("worker command is empty");
  // A dead worker must surface as a read error, not kill the engine.
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw EvaluationError("pipe() failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw EvaluationError("pipe() failed");
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const int rc = ::posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    pid_ = -1;
    throw EvaluationError(fmt::format("cannot start worker '{}': {}", argv[0], std::strerror(rc)));
  }
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

WorkerProcess::~WorkerProcess() { terminate(); }

void WorkerProcess::terminate() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

void WorkerProcess::write_line(std::string_view line) {
  std::string data(line);
  data += '\n';
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EvaluationError(fmt::format("writing to worker failed: {}", std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> WorkerProcess::read_line(
    std::chrono::steady_clock::time_point deadline) {
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return std::nullopt;
    const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(wait.count() + 1, 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw EvaluationError(fmt::format("poll() failed: {}", std::strerror(errno)));
    }
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EvaluationError(fmt::format("reading from worker failed: {}", std::strerror(errno)));
    }
    if (n == 0) throw EvaluationError("worker exited");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

// WorkerClient

WorkerClient::WorkerClient(WorkerOptions options) : options_(std::move(options)) {
  options_.command = resolve_worker_command(std::move(options_.command));
}

std::chrono::duration<double> WorkerClient::current_timeout() const {
  if (options_.fixed_timeout_s) return std::chrono::duration<double>(*options_.fixed_timeout_s);
  if (durations_s_.empty()) return std::chrono::duration<double>(options_.initial_timeout_s);
  std::vector<double> d = durations_s_;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double median = *mid;
  if (d.size() % 2 == 0) {
    median = (median + *std::max_element(d.begin(), mid)) / 2.0;
  }
  return std::chrono::duration<double>(
      std::max(options_.timeout_floor_s, options_.timeout_multiplier * median));
}

void WorkerClient::ensure_started() {
  if (process_) return;
  process_ = std::make_unique<WorkerProcess>(options_.command);
  process_->write_line(encode_message(Hello{}));
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::min(current_timeout(), std::chrono::duration<double>(60.0)));
  std::optional<std::string> line;
  try {
    line = process_->read_line(deadline);
  } catch (...) {
    process_.reset();
    throw;
  }
  if (!line) {
    process_.reset();
    throw EvaluationError("worker did not answer the handshake");
  }
  try {
    Hello reply = decode_as<Hello>(*line);
    if (reply.protocol != kProtocolVersion) {
      throw ProtocolError(fmt::format("worker speaks '{}', engine speaks '{}'", reply.protocol,
                                      kProtocolVersion));
    }
    hello_ = std::move(reply);
  } catch (const ProtocolError& e) {
    process_.reset();
    throw EvaluationError(fmt::format("handshake failed: {}", e.what()));
  }
}

Hello WorkerClient::handshake() {
  ensure_started();
  return *hello_;
}

void WorkerClient::stop() {
  if (process_) {
    try {
      process_->write_line(encode_message(Shutdown{}));
    } catch (const EvaluationError&) {
    }
    process_.reset();
  }
  hello_.reset();
}

FitnessResult WorkerClient::remote_evaluate(const FitnessRequest& request) {
  ensure_started();
  const auto start = std::chrono::steady_clock::now();
  const auto timeout = current_timeout();
  const auto deadline =
      start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(timeout);

  auto fail = [&](const std::string& why) -> EvaluationError {
    process_.reset();
    hello_.reset();
    return EvaluationError(fmt::format("request {}: {}", request.request_id, why));
  };

  ++requests_sent_;
  std::optional<std::string> line;
  try {
    process_->write_line(encode_message(request));
    line = process_->read_line(deadline);
  } catch (const EvaluationError& e) {
    throw fail(e.what());
  }
  if (!line) throw fail(fmt::format("timed out after {:.1f} s", timeout.count()));

  FitnessResult result;
  try {
    result = decode_as<FitnessResult>(*line);
  } catch (const ProtocolError& e) {
    throw fail(fmt::format("protocol error: {}", e.what()));
  }
  if (result.request_id != request.request_id) {
    throw fail(fmt::format("protocol error: reply carries request_id {}",
                           result.request_id ? std::to_string(*result.request_id) : "null"));
  }
  if (result.status == ResultStatus::error) {
    throw fail(fmt::format("worker reported an error: {}", result.diagnostics));
  }
  durations_s_.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return result;
}

// WorkerEvaluator

WorkerEvaluator::WorkerEvaluator(WorkerOptions options, GenomeLayout layout)
    : client_(std::move(options)), layout_(layout) {}

std::string WorkerEvaluator::identity() const {
  const auto& o = client_.options();
  const std::string exe =
      o.command.empty() ? std::string() : std::filesystem::path(o.command[0]).filename().string();
  return fmt::format("worker/{}/it{}/bs{}/seed{}", exe, o.train_iterations, o.batch_size,
                     o.rng_seed);
}

Objectives WorkerEvaluator::evaluate(const Genome& genome, Split split) {
  const ArchitectureSpec arch = build_architecture(genome, layout_);
  FitnessRequest request;
  request.architecture = to_architecture_message(arch);
  request.train_iterations = client_.options().train_iterations;
  request.batch_size = client_.options().batch_size;
  request.split = split;
  request.rng_seed = client_.options().rng_seed;

  const int attempts = std::max(1, client_.options().max_attempts);
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    request.request_id = next_request_id_++;
    try {
      const FitnessResult r = client_.remote_evaluate(request);
      return {r.mean_sdr_db, count_params(arch)};
    } catch (const EvaluationError& e) {
      last_error = e.what();
    }
  }
  throw EvaluationError(fmt::format("gave up after {} attempts; last error: {}", attempts, last_error));
}

}  // namespace emrp

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

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <unistd.h>

#include "emrp/fitness.hpp"
#include "emrp/worker_client.hpp"
#include "oracles.hpp"

using namespace emrp;
namespace fs = std::filesystem;

namespace {

// Surrogate straight from bit positions.
double surrogate_oracle(const std::string& bits) {
  static const int pool[4] = {1, 4, 64, 16};  // indexed by the raw two-bit value 00,01,10,11
  auto two = [&](std::size_t at) { return (bits[at] - '0') * 2 + (bits[at + 1] - '0'); };
  std::set<int> areas;
  int sigmoids = 0;
  for (std::size_t b = 0; b < 5; ++b) {
    const std::size_t base = 12 + 26 * b;
    if (two(base) != 0) sigmoids += (bits[base + 3] - '0') + (bits[base + 4] - '0');
    for (std::size_t p = 0; p < 2; ++p) {
      const std::size_t at = base + 5 + 9 * p;
      const int t = pool[two(at)];
      const int f = pool[two(at + 2)];
      if (t * f == 1) continue;
      areas.insert(t * f);
      sigmoids += (bits[at + 7] - '0') + (bits[at + 8] - '0');
    }
    sigmoids += (bits[base + 24] - '0') + (bits[base + 25] - '0');
  }
  const double params = static_cast<double>(oracle::params(bits));
  return 6.0 + 2.0 * std::tanh(std::log(params / 1e6)) + 0.3 * static_cast<double>(areas.size()) -
         0.2 * sigmoids;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / fmt::format("emrp-{}-{}", name, ::getpid());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

WorkerOptions echo_options(std::vector<std::string> extra = {}) {
  WorkerOptions o;
  o.command = {EMRP_ECHO_WORKER};
  o.command.insert(o.command.end(), extra.begin(), extra.end());
  o.fixed_timeout_s = 10.0;
  return o;
}

// Counts calls to the wrapped evaluator.
class CountingEvaluator final : public Evaluator {
 public:
  Objectives evaluate(const Genome& g, Split s) override {
    ++calls;
    return inner.evaluate(g, s);
  }
  std::string identity() const override { return inner.identity(); }
  SurrogateEvaluator inner;
  int calls = 0;
};

}  // namespace

TEST_CASE("surrogate of the seed") {
  const double expected = 6.0 + 2.0 * std::tanh(std::log(2.327874)) + 0.3;
  CHECK(surrogate_sdr(seed_genome()) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(surrogate_sdr(seed_genome()) == doctest::Approx(7.67685).epsilon(1e-5));
}

TEST_CASE("surrogate matches the bit-level oracle") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    const Genome g = oracle::random_genome(rng);
    try {
      const double got = surrogate_sdr(g);
      CHECK(got == doctest::Approx(surrogate_oracle(g.to_bitstring())).epsilon(1e-12));
    } catch (const ShapeError&) {
      // non-divisible pooling cannot be built; nothing to compare
    }
  }
}

TEST_CASE("complexity and surrogate evaluators") {
  const Genome seed = seed_genome();
  ComplexityEvaluator c;
  SurrogateEvaluator s;
  CHECK(c.evaluate(seed, Split::test).params == 2'327'874);
  CHECK(c.evaluate(seed, Split::test).sdr_db == 0.0);
  CHECK(s.evaluate(seed, Split::test).params == 2'327'874);
  CHECK(s.evaluate(seed, Split::test).sdr_db == s.evaluate(seed, Split::validation).sdr_db);
  CHECK(c.identity() != s.identity());
  CHECK(c.concurrent_safe());
  CHECK(split_from_string("validation") == Split::validation);
  CHECK_THROWS(split_from_string("train"));
}

TEST_CASE("cache keys on bits, evaluator and split") {
  FitnessCache cache;
  const Genome g = seed_genome();
  cache.put({g.to_bitstring(), "a", Split::test, {1.5, 10}, 0});
  CHECK(cache.get(g, "a", Split::test)->sdr_db == 1.5);
  CHECK_FALSE(cache.get(g, "b", Split::test));
  CHECK_FALSE(cache.get(g, "a", Split::validation));
  Genome other = g;
  other.flip(0);
  CHECK_FALSE(cache.get(other, "a", Split::test));
  CHECK(cache.size() == 1);
  cache.clear();
  CHECK(cache.size() == 0);
}

TEST_CASE("repeat evaluation hits the cache; clearing forces a second call") {
  FitnessCache cache;
  CountingEvaluator inner;
  CachedEvaluator ev(inner, cache);
  const Genome g = seed_genome();
  const Objectives a = ev.evaluate(g, Split::test);
  const Objectives b = ev.evaluate(g, Split::test);
  CHECK(a == b);
  CHECK(inner.calls == 1);
  CHECK(ev.stats().hits == 1);
  cache.clear();
  (void)ev.evaluate(g, Split::test);
  CHECK(inner.calls == 2);
  CHECK(ev.stats().requests == 3);
  CHECK(ev.stats().inner_calls == 2);
}

TEST_CASE("cache file survives reopening and skips corrupt lines") {
  const fs::path dir = temp_dir("cache");
  const fs::path file = dir / "cache.jsonl";
  const Genome g = seed_genome();
  {
    FitnessCache cache(file);
    cache.put({g.to_bitstring(), "surrogate/1", Split::test, {7.25, 2327874}, 1700000000});
  }
  {
    std::ofstream out(file, std::ios::app);
    out << "{\"genome\": \"0101\", truncated\n";
    out << "not json at all\n";
  }
  std::vector<std::string> warnings;
  FitnessCache reopened(file, [&](std::string_view w) { warnings.emplace_back(w); });
  CHECK(reopened.size() == 1);
  CHECK(reopened.skipped_lines() == 2);
  CHECK(warnings.size() == 2);
  const auto hit = reopened.get(g, "surrogate/1", Split::test);
  REQUIRE(hit);
  CHECK(hit->sdr_db == 7.25);
  CHECK(hit->params == 2327874);
  fs::remove_all(dir);
}

TEST_CASE("echo worker behaves like the in-process surrogate") {
  WorkerEvaluator worker(echo_options());
  SurrogateEvaluator local;
  std::mt19937_64 rng(5);
  int compared = 0;
  for (int i = 0; i < 40; ++i) {
    const Genome g = oracle::random_genome(rng);
    Objectives expected;
    try {
      expected = local.evaluate(g, Split::test);
    } catch (const ShapeError&) {
      continue;
    }
    CHECK(worker.evaluate(g, Split::test) == expected);
    ++compared;
  }
  CHECK(compared > 10);
  const Hello h = worker.client().handshake();
  CHECK(h.protocol == kProtocolVersion);
  CHECK(h.worker == "emrp-echo");
}

TEST_CASE("validation requests carry the split selector") {
  const fs::path dir = temp_dir("split");
  const fs::path log = dir / "calls.txt";
  WorkerEvaluator worker(echo_options({"--call-log", log.string()}));
  (void)worker.evaluate(seed_genome(), Split::validation);
  (void)worker.evaluate(seed_genome(), Split::test);
  std::ifstream in(log);
  std::string id, split;
  in >> id >> split;
  CHECK(split == "validation");
  in >> id >> split;
  CHECK(split == "test");
  fs::remove_all(dir);
}

TEST_CASE("mismatched request id is a protocol error") {
  auto opts = echo_options({"--fail-mode", "mismatch-id"});
  WorkerClient client(opts);
  FitnessRequest req;
  req.request_id = 41;
  req.architecture = to_architecture_message(build_architecture(seed_genome()));
  try {
    (void)client.remote_evaluate(req);
    FAIL("expected an EvaluationError");
  } catch (const EvaluationError& e) {
    const std::string what = e.what();
    CHECK(what.find("request 41") != std::string::npos);
    CHECK(what.find("protocol error") != std::string::npos);
  }
}

TEST_CASE("a single failure is retried once") {
  const fs::path dir = temp_dir("retry");
  for (const char* mode : {"crash", "garbage", "error", "mismatch-id"}) {
    CAPTURE(mode);
    const fs::path log = dir / fmt::format("{}.txt", mode);
    WorkerEvaluator worker(echo_options(
        {"--fail-mode", mode, "--fail-count", "1", "--call-log", log.string()}));
    const Objectives o = worker.evaluate(seed_genome(), Split::test);
    CHECK(o.sdr_db == doctest::Approx(surrogate_sdr(seed_genome())));
    CHECK(line_count(log) == 2);
  }
  fs::remove_all(dir);
}

TEST_CASE("persistent failures abort after the retry") {
  const fs::path dir = temp_dir("abort");
  const fs::path log = dir / "calls.txt";
  WorkerEvaluator worker(echo_options({"--fail-mode", "crash", "--call-log", log.string()}));
  CHECK_THROWS_AS(worker.evaluate(seed_genome(), Split::test), EvaluationError);
  CHECK(line_count(log) == 2);
  fs::remove_all(dir);
}

TEST_CASE("hung worker times out") {
  auto opts = echo_options({"--fail-mode", "hang"});
  opts.fixed_timeout_s = 0.3;
  opts.max_attempts = 1;
  WorkerEvaluator worker(opts);
  try {
    (void)worker.evaluate(seed_genome(), Split::test);
    FAIL("expected an EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(std::string(e.what()).find("timed out") != std::string::npos);
  }
}

TEST_CASE("timeout follows the observed median with a floor") {
  auto opts = echo_options({"--delay-ms", "40"});
  opts.fixed_timeout_s.reset();
  opts.initial_timeout_s = 123.0;
  opts.timeout_floor_s = 0.0;
  WorkerEvaluator worker(opts);
  CHECK(worker.client().current_timeout().count() == 123.0);
  for (int i = 0; i < 3; ++i) (void)worker.evaluate(seed_genome(), Split::test);
  const double t = worker.client().current_timeout().count();
  CHECK(t >= 0.4);
  CHECK(t < 5.0);

  opts.timeout_floor_s = 60.0;
  WorkerEvaluator floored(opts);
  (void)floored.evaluate(seed_genome(), Split::test);
  CHECK(floored.client().current_timeout().count() == 60.0);
}

TEST_CASE("handshake failures") {
  WorkerClient bad(echo_options({"--fail-mode", "bad-hello"}));
  CHECK_THROWS_AS(bad.handshake(), EvaluationError);
  WorkerClient missing(WorkerOptions{{"/nonexistent/emrp-worker"}});
  CHECK_THROWS_AS(missing.handshake(), EvaluationError);
}

TEST_CASE("environment variable overrides the worker path") {
  ::setenv(kWorkerEnvVar, EMRP_ECHO_WORKER, 1);
  WorkerEvaluator worker(WorkerOptions{{"/nonexistent/emrp-worker"}});
  ::unsetenv(kWorkerEnvVar);
  CHECK(worker.client().options().command.front() == EMRP_ECHO_WORKER);
  CHECK(worker.evaluate(seed_genome(), Split::test).params == 2'327'874);
  CHECK(resolve_worker_command({"python3", "worker.py"}) ==
        std::vector<std::string>{"python3", "worker.py"});
}

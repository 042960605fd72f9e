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

#ifndef EMRP_FITNESS_HPP_
#define EMRP_FITNESS_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

#include "emrp/genome.hpp"
#include "emrp/objectives.hpp"
#include "emrp/phenotype.hpp"

namespace emrp {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Which held-out subset the SDR is measured on.
enum class Split : std::uint8_t { test, validation };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

// Evaluators must return the same Objectives for the same genome and split
// within one run.
class Evaluator {
 public:
  virtual ~Evaluator() = default;

  virtual Objectives evaluate(const Genome& genome, Split split) = 0;
  // Stable name used as part of the cache key.
  virtual std::string identity() const = 0;
  virtual bool supports_validation_split() const { return true; }
  virtual bool concurrent_safe() const { return false; }
};

std::uint64_t evaluate_complexity(const Genome& genome, const GenomeLayout& layout = {});

// Stand-in SDR for exercising the search without training. Not a
// measurement of anything:
//   6 + 2*tanh(ln(params / 1e6)) + 0.3 * (distinct active pool areas T*F)
//     - 0.2 * (sigmoid activations in active groups)
double surrogate_sdr(const ArchitectureSpec& arch);
double surrogate_sdr(const Genome& genome, const GenomeLayout& layout = {});

// Params only; SDR is reported as 0.
class ComplexityEvaluator final : public Evaluator {
 public:
  explicit ComplexityEvaluator(GenomeLayout layout = {}) : layout_(layout) {}
  Objectives evaluate(const Genome& genome, Split split) override;
  std::string identity() const override { return "complexity-only/1"; }
  bool concurrent_safe() const override { return true; }

 private:
  GenomeLayout layout_;
};

// Same value for both splits.
class SurrogateEvaluator final : public Evaluator {
 public:
  explicit SurrogateEvaluator(GenomeLayout layout = {}) : layout_(layout) {}
  Objectives evaluate(const Genome& genome, Split split) override;
  std::string identity() const override { return "surrogate/1"; }
  bool concurrent_safe() const override { return true; }

 private:
  GenomeLayout layout_;
};

struct CacheEntry {
  std::string bits;  // ungrouped bitstring
  std::string evaluator;
  Split split = Split::test;
  Objectives objectives;
  std::int64_t timestamp = 0;  // unix seconds
};

// genome -> objectives, keyed by exact bits, evaluator identity and split.
// With a backing file every put is appended as one JSON line, and existing
// lines are loaded on construction. Unparseable lines are skipped.
class FitnessCache {
 public:
  using WarningSink = std::function<void(std::string_view)>;

  FitnessCache() = default;
  explicit FitnessCache(std::filesystem::path file, WarningSink warn = {});

  std::optional<Objectives> get(const Genome& genome, std::string_view evaluator,
                                Split split) const;
  void put(const CacheEntry& entry);
  void clear();

  std::size_t size() const;
  std::size_t skipped_lines() const { return skipped_lines_; }

 private:
  static std::string key(std::string_view bits, std::string_view evaluator, Split split);

  mutable std::mutex mutex_;
  std::unordered_map<std::string, Objectives> entries_;
  std::optional<std::filesystem::path> file_;
  std::ofstream out_;
  std::size_t skipped_lines_ = 0;
};

struct CacheStats {
  std::uint64_t requests = 0;
  std::uint64_t hits = 0;
  std::uint64_t inner_calls = 0;
};

// Looks up the cache before delegating; results of misses are stored.
class CachedEvaluator final : public Evaluator {
 public:
  CachedEvaluator(Evaluator& inner, FitnessCache& cache) : inner_(inner), cache_(cache) {}

  Objectives evaluate(const Genome& genome, Split split) override;
  std::string identity() const override { return inner_.identity(); }
  bool supports_validation_split() const override { return inner_.supports_validation_split(); }
  bool concurrent_safe() const override { return inner_.concurrent_safe(); }

  CacheStats stats() const { return {requests_.load(), hits_.load(), inner_calls_.load()}; }

 private:
  Evaluator& inner_;
  FitnessCache& cache_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> inner_calls_{0};
};

}  // namespace emrp

#endif  // EMRP_FITNESS_HPP_

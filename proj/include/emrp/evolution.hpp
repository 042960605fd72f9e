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

#ifndef EMRP_EVOLUTION_HPP_
#define EMRP_EVOLUTION_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "emrp/fitness.hpp"
#include "emrp/genome.hpp"
#include "emrp/objectives.hpp"

namespace emrp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scheme : std::uint8_t { single, multi };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

struct EvolutionConfig {
  Scheme scheme = Scheme::single;
  std::size_t initial_population = 22;   // n
  std::size_t max_seed_flips = 20;       // u
  std::size_t max_generations = 100;     // N
  std::size_t population_limit = 15;     // Z
  std::size_t crossover_offspring = 10;  // o_c
  std::size_t mutation_offspring = 25;   // o_m = o_c + Z
  double crossover_prob = 0.5;           // p1
  double mutation_prob = 0.02;           // p2
  std::size_t stagnation_patience = 8;   // S, single scheme only
  std::uint64_t rng_seed = 1;
  // Keep running to max_generations after the stopping criterion fires.
  bool force_generations = false;
  std::size_t init_draw_budget = 10'000;
  // Concurrent offspring evaluations; used only for concurrent-safe evaluators.
  std::size_t parallel_evaluations = 1;

  static EvolutionConfig defaults(Scheme scheme);
  void validate() const;

  friend bool operator==(const EvolutionConfig&, const EvolutionConfig&) = default;
};

struct Individual {
  Genome genome;
  Objectives objectives;
  std::size_t born_generation = 0;
  std::uint64_t eval_id = 0;
};

struct GenerationRecord {
  std::size_t index = 0;
  // Survivors in stored order: SDR rank for the single scheme, crowded order
  // for the multi scheme.
  std::vector<Individual> population;
  // Initialization only: evaluated individuals cut by the population limit.
  std::vector<Individual> discarded;
  std::optional<double> best_validation_sdr;  // single scheme, generations >= 1
  std::vector<std::uint64_t> pareto_front_ids;  // multi scheme
  std::size_t evaluations = 0;
};

// Random draws. All use one mt19937_64 and the two helpers below so the draw
// sequence does not depend on the standard library's distributions.
using Rng = std::mt19937_64;

Rng generation_rng(std::uint64_t rng_seed, std::size_t generation);
std::size_t uniform_index(Rng& rng, std::size_t n);  // [0, n)
bool bernoulli(Rng& rng, double p);                 // one draw per call

// Bit i comes from `donor` with probability p1, else from `baseline`.
Genome crossover(const Genome& baseline, const Genome& donor, double p1, Rng& rng);
// Flips each bit independently with probability p2.
Genome mutate(const Genome& parent, double p2, Rng& rng);
// Flips exactly `count` distinct bits.
Genome flip_bits(const Genome& parent, std::size_t count, Rng& rng);

// Orders `pool` by the survival rule of `scheme` and truncates to `limit`.
// Removed individuals go to `discarded` when given.
std::vector<Individual> select_survivors(std::vector<Individual> pool, Scheme scheme,
                                         std::size_t limit,
                                         std::vector<Individual>* discarded = nullptr);

// Eval ids of the front-0 members of `population`.
std::vector<std::uint64_t> pareto_front_ids(std::span<const Individual> population);

struct StopDecision {
  bool stop = false;
  std::size_t stop_index = 0;    // position in the series where the streak reached S
  std::size_t output_index = 0;  // position holding the running maximum
};

// Stops once S consecutive entries fail to exceed the running maximum.
StopDecision stopping_check(std::span<const double> validation_sdr, std::size_t patience);

// Evaluates the seed plus n-1 distinct mutants (ids start at next_eval_id)
// and truncates to Z. Draws from generation_rng(seed, 0).
GenerationRecord init_population(const Genome& seed, const EvolutionConfig& config,
                                 Evaluator& evaluator, std::uint64_t& next_eval_id);

// One generation. Draw order from generation_rng(seed, index):
//   1. for each of o_c crossovers: baseline index, donor index (distinct), then
//      one bernoulli(p1) per bit;
//   2. mutation of each of the Z current individuals in stored order, then of
//      each crossover child, one bernoulli(p2) per bit.
// Offspring get consecutive eval ids in that order. The input is left
// untouched when an evaluation fails.
GenerationRecord step_generation(const GenerationRecord& current, const EvolutionConfig& config,
                                 Evaluator& evaluator, std::uint64_t& next_eval_id);

// Everything needed to continue a run.
struct EvolutionState {
  GenerationRecord current;
  std::uint64_t next_eval_id = 0;
  std::vector<double> validation_history;  // entry k belongs to generation k+1
  std::optional<std::size_t> stop_generation;
  std::optional<std::size_t> output_generation;
};

EvolutionState start_evolution(const Genome& seed, const EvolutionConfig& config,
                               Evaluator& evaluator);
bool evolution_finished(const EvolutionState& state, const EvolutionConfig& config);
// Runs the next generation, including validation bookkeeping and the
// stopping check for the single scheme.
void advance_generation(EvolutionState& state, const EvolutionConfig& config,
                        Evaluator& evaluator);

}  // namespace emrp

#endif  // EMRP_EVOLUTION_HPP_

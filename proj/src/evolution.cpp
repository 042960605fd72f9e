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

#include "emrp/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "emrp/nsga2.hpp"

namespace emrp {

std::string_view to_string(Scheme s) { return s == Scheme::single ? "single" : "multi"; }

Scheme scheme_from_string(std::string_view s) {
  if (s == "single") return Scheme::single;
  if (s == "multi") return Scheme::multi;
  throw ConfigError(fmt::format("unknown scheme '{}'", s));
}

EvolutionConfig EvolutionConfig::defaults(Scheme scheme) {
  EvolutionConfig c;
  c.scheme = scheme;
  if (scheme == Scheme::multi) {
    c.initial_population = 37;
    c.population_limit = 25;
    c.mutation_offspring = 35;
  }
  return c;
}

void EvolutionConfig::validate() const {
  if (initial_population < 1) throw ConfigError("n must be at least 1");
  if (max_seed_flips < 1) throw ConfigError("u must be at least 1");
  if (population_limit < 1) throw ConfigError("Z must be at least 1");
  if (mutation_offspring != crossover_offspring + population_limit) {
    throw ConfigError(fmt::format("o_m ({}) must equal o_c + Z ({})", mutation_offspring,
                                  crossover_offspring + population_limit));
  }
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) throw ConfigError("p1 must lie in [0, 1]");
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) throw ConfigError("p2 must lie in [0, 1]");
  if (scheme == Scheme::single && stagnation_patience < 1) throw ConfigError("S must be at least 1");
  if (parallel_evaluations < 1) throw ConfigError("parallel_evaluations must be at least 1");
}

// Random draws

Rng generation_rng(std::uint64_t rng_seed, std::size_t generation) {
  std::seed_seq seq{static_cast<std::uint32_t>(rng_seed), static_cast<std::uint32_t>(rng_seed >> 32),
                    static_cast<std::uint32_t>(generation),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(generation) >> 32)};
  return Rng(seq);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

bool bernoulli(Rng& rng, double p) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return u < p;
}

Genome crossover(const Genome& baseline, const Genome& donor, double p1, Rng& rng) {
  if (baseline.size() != donor.size()) {
    throw std::invalid_argument(fmt::format("crossover of genomes with {} and {} bits",
                                            baseline.size(), donor.size()));
  }
  Genome child = baseline;
  for (std::size_t i = 0; i < child.size(); ++i) {
    if (bernoulli(rng, p1)) child.set(i, donor[i]);
  }
  return child;
}

Genome mutate(const Genome& parent, double p2, Rng& rng) {
  Genome child = parent;
  for (std::size_t i = 0; i < child.size(); ++i) {
    if (bernoulli(rng, p2)) child.flip(i);
  }
  return child;
}

Genome flip_bits(const Genome& parent, std::size_t count, Rng& rng) {
  std::vector<std::size_t> positions(parent.size());
  std::iota(positions.begin(), positions.end(), 0);
  count = std::min(count, positions.size());
  Genome child = parent;
  // partial Fisher-Yates
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = k + uniform_index(rng, positions.size() - k);
    std::swap(positions[k], positions[pick]);
    child.flip(positions[k]);
  }
  return child;
}

// Selection

std::vector<Individual> select_survivors(std::vector<Individual> pool, Scheme scheme,
                                         std::size_t limit, std::vector<Individual>* discarded) {
  if (scheme == Scheme::single) {
    std::sort(pool.begin(), pool.end(), [](const Individual& a, const Individual& b) {
      if (a.objectives.sdr_db != b.objectives.sdr_db) return a.objectives.sdr_db > b.objectives.sdr_db;
      if (a.objectives.params != b.objectives.params) return a.objectives.params < b.objectives.params;
      return a.eval_id < b.eval_id;
    });
  } else {
    std::sort(pool.begin(), pool.end(),
              [](const Individual& a, const Individual& b) { return a.eval_id < b.eval_id; });
    std::vector<Objectives> objs;
    objs.reserve(pool.size());
    for (const auto& ind : pool) objs.push_back(ind.objectives);
    std::vector<Individual> ordered;
    ordered.reserve(pool.size());
    for (std::size_t i : crowded_order(objs)) ordered.push_back(std::move(pool[i]));
    pool = std::move(ordered);
  }
  if (pool.size() > limit) {
    if (discarded) {
      discarded->assign(std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>(limit)),
                        std::make_move_iterator(pool.end()));
    }
    pool.resize(limit);
  }
  return pool;
}

std::vector<std::uint64_t> pareto_front_ids(std::span<const Individual> population) {
  std::vector<Objectives> objs;
  for (const auto& ind : population) objs.push_back(ind.objectives);
  std::vector<std::uint64_t> ids;
  const auto fronts = fast_nondominated_sort(objs);
  if (fronts.empty()) return ids;
  for (std::size_t i : fronts.front()) ids.push_back(population[i].eval_id);
  return ids;
}

StopDecision stopping_check(std::span<const double> validation_sdr, std::size_t patience) {
  StopDecision d;
  if (validation_sdr.empty() || patience == 0) return d;
  double best = validation_sdr[0];
  std::size_t best_index = 0;
  std::size_t streak = 0;
  for (std::size_t i = 1; i < validation_sdr.size(); ++i) {
    if (validation_sdr[i] > best) {
      best = validation_sdr[i];
      best_index = i;
      streak = 0;
      continue;
    }
    if (++streak == patience) {
      d.stop = true;
      d.stop_index = i;
      d.output_index = best_index;
      return d;
    }
  }
  return d;
}

// Evaluation

namespace {

std::vector<Objectives> evaluate_all(std::span<const Genome> genomes, Split split,
                                     const EvolutionConfig& config, Evaluator& evaluator,
                                     std::uint64_t first_id) {
  std::vector<Objectives> results(genomes.size());
  std::vector<std::exception_ptr> errors(genomes.size());

  auto run_one = [&](std::size_t i) {
    try {
      results[i] = evaluator.evaluate(genomes[i], split);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t workers =
      evaluator.concurrent_safe() ? std::min(config.parallel_evaluations, genomes.size()) : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < genomes.size(); ++i) {
      run_one(i);
      if (errors[i]) break;
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < genomes.size(); i = next++) run_one(i);
      });
    }
  }

  // Report the lowest failing id so the error does not depend on scheduling.
  for (std::size_t i = 0; i < genomes.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw EvaluationError(fmt::format("evaluation {} failed: {}", first_id + i, e.what()));
    }
  }
  return results;
}

}  // namespace

GenerationRecord init_population(const Genome& seed, const EvolutionConfig& config,
                                 Evaluator& evaluator, std::uint64_t& next_eval_id) {
  config.validate();
  Rng rng = generation_rng(config.rng_seed, 0);

  std::vector<Genome> genomes{seed};
  std::set<Genome> seen{seed};
  std::size_t draws = 0;
  while (genomes.size() < config.initial_population) {
    if (draws++ >= config.init_draw_budget) {
      throw InitializationError(fmt::format(
          "found only {} distinct mutants of the seed after {} draws (need {})",
          genomes.size() - 1, config.init_draw_budget, config.initial_population - 1));
    }
    const std::size_t flips = 1 + uniform_index(rng, std::min(config.max_seed_flips, seed.size()));
    Genome mutant = flip_bits(seed, flips, rng);
    if (seen.insert(mutant).second) genomes.push_back(std::move(mutant));
  }

  const auto results = evaluate_all(genomes, Split::test, config, evaluator, next_eval_id);
  std::vector<Individual> pool;
  for (std::size_t i = 0; i < genomes.size(); ++i) {
    pool.push_back({std::move(genomes[i]), results[i], 0, next_eval_id + i});
  }
  next_eval_id += pool.size();

  GenerationRecord record;
  record.index = 0;
  record.evaluations = pool.size();
  record.population =
      select_survivors(std::move(pool), config.scheme, config.population_limit, &record.discarded);
  if (config.scheme == Scheme::multi) record.pareto_front_ids = pareto_front_ids(record.population);
  return record;
}

GenerationRecord step_generation(const GenerationRecord& current, const EvolutionConfig& config,
                                 Evaluator& evaluator, std::uint64_t& next_eval_id) {
  config.validate();
  if (current.population.empty()) throw std::invalid_argument("cannot evolve an empty population");
  const std::size_t index = current.index + 1;
  Rng rng = generation_rng(config.rng_seed, index);
  const auto& parents = current.population;

  std::vector<Genome> crossed;
  crossed.reserve(config.crossover_offspring);
  for (std::size_t k = 0; k < config.crossover_offspring; ++k) {
    const std::size_t a = uniform_index(rng, parents.size());
    std::size_t b = a;
    if (parents.size() > 1) {
      b = uniform_index(rng, parents.size() - 1);
      if (b >= a) ++b;
    }
    crossed.push_back(crossover(parents[a].genome, parents[b].genome, config.crossover_prob, rng));
  }

  std::vector<Genome> offspring = crossed;
  for (const auto& p : parents) offspring.push_back(mutate(p.genome, config.mutation_prob, rng));
  for (const auto& c : crossed) offspring.push_back(mutate(c, config.mutation_prob, rng));

  const std::uint64_t first_id = next_eval_id;
  const auto results = evaluate_all(offspring, Split::test, config, evaluator, first_id);

  std::vector<Individual> pool = parents;
  for (std::size_t i = 0; i < offspring.size(); ++i) {
    pool.push_back({std::move(offspring[i]), results[i], index, first_id + i});
  }

  GenerationRecord record;
  record.index = index;
  record.evaluations = results.size();
  record.population = select_survivors(std::move(pool), config.scheme, config.population_limit);
  if (config.scheme == Scheme::multi) record.pareto_front_ids = pareto_front_ids(record.population);
  next_eval_id = first_id + results.size();
  return record;
}

// Run loop

EvolutionState start_evolution(const Genome& seed, const EvolutionConfig& config,
                               Evaluator& evaluator) {
  EvolutionState state;
  state.current = init_population(seed, config, evaluator, state.next_eval_id);
  return state;
}

bool evolution_finished(const EvolutionState& state, const EvolutionConfig& config) {
  if (state.current.index >= config.max_generations) return true;
  return state.stop_generation.has_value() && !config.force_generations;
}

void advance_generation(EvolutionState& state, const EvolutionConfig& config,
                        Evaluator& evaluator) {
  std::uint64_t next_id = state.next_eval_id;
  GenerationRecord record = step_generation(state.current, config, evaluator, next_id);

  std::vector<double> history = state.validation_history;
  if (config.scheme == Scheme::single) {
    const Individual& best = record.population.front();
    Objectives v = best.objectives;
    if (evaluator.supports_validation_split()) {
      try {
        v = evaluator.evaluate(best.genome, Split::validation);
      } catch (const std::exception& e) {
        throw EvaluationError(fmt::format("validation of evaluation {} failed: {}", best.eval_id,
                                          e.what()));
      }
    }
    record.best_validation_sdr = v.sdr_db;
    history.push_back(v.sdr_db);
  }

  state.current = std::move(record);
  state.next_eval_id = next_id;
  state.validation_history = std::move(history);
  if (config.scheme == Scheme::single && !state.stop_generation) {
    const StopDecision d = stopping_check(state.validation_history, config.stagnation_patience);
    if (d.stop) {
      state.stop_generation = d.stop_index + 1;
      state.output_generation = d.output_index + 1;
    }
  }
}

}  // namespace emrp

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

// Run orchestration. A run directory holds
//   config.json               the RunConfig
//   generations/gen_NNNN.jsonl one file per completed generation
//   cache.jsonl               fitness cache
//   report.json               written when the run finishes
// See docs/protocol.md for the line formats.

#ifndef EMRP_SESSION_HPP_
#define EMRP_SESSION_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emrp/evolution.hpp"
#include "emrp/worker_client.hpp"

namespace emrp {

// Broken or missing run-directory contents.
class RunLogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EvaluatorKind : std::uint8_t { surrogate, complexity_only, worker };

std::string_view to_string(EvaluatorKind k);
EvaluatorKind evaluator_kind_from_string(std::string_view s);

struct RunConfig {
  EvolutionConfig evolution;
  EvaluatorKind evaluator = EvaluatorKind::surrogate;
  std::string dataset = "MIR";  // label tag only
  std::string seed_genome;      // genome text; empty means the built-in seed
  WorkerOptions worker;

  Genome seed() const;
  void validate() const;
};

// Keys: scheme n u N Z o_c o_m p1 p2 S rng_seed force_generations
// parallel_evaluations evaluator dataset seed_genome worker{...}. Missing
// keys take the defaults of the scheme; unknown keys are rejected.
nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& file);

std::unique_ptr<Evaluator> make_evaluator(const RunConfig& config);

// "S-16-1-MIR": scheme, generation, index, dataset. The single-scheme index
// is the SDR rank in the generation (1 = best); the multi-scheme index is the
// stored position. Both are 1-based.
struct IndividualLabel {
  Scheme scheme = Scheme::single;
  std::size_t generation = 0;
  std::size_t index = 1;
  std::string dataset = "MIR";

  std::string str() const;
  static IndividualLabel parse(std::string_view text);

  friend bool operator==(const IndividualLabel&, const IndividualLabel&) = default;
};

// One generation file as stored.
struct LoggedIndividual {
  std::size_t position = 0;  // 0-based
  std::string label;
  Individual individual;
  bool survivor = true;
};

struct GenerationLog {
  std::size_t index = 0;
  Scheme scheme = Scheme::single;
  std::vector<LoggedIndividual> rows;  // survivors first, then discarded
  std::uint64_t next_eval_id = 0;
  std::optional<double> best_validation_sdr;
  std::vector<std::uint64_t> pareto_front_ids;
  std::size_t evaluations = 0;

  GenerationRecord record() const;
};

std::filesystem::path generation_path(const std::filesystem::path& run_dir, std::size_t index);
void write_generation(const std::filesystem::path& run_dir, const GenerationRecord& record,
                      Scheme scheme, std::string_view dataset, std::uint64_t next_eval_id);
GenerationLog read_generation(const std::filesystem::path& run_dir, std::size_t index);
// All generation files in order; throws RunLogError naming the first broken one.
std::vector<GenerationLog> read_generations(const std::filesystem::path& run_dir);

struct RunHooks {
  // Called after each generation has been written.
  std::function<void(const GenerationRecord&)> on_generation;
};

// Starts a fresh run; refuses a directory that already has generations.
nlohmann::json run(const RunConfig& config, const std::filesystem::path& run_dir,
                   const RunHooks& hooks = {});
// Continues from the last complete generation.
nlohmann::json resume(const std::filesystem::path& run_dir, const RunHooks& hooks = {});

// CSV "generation,sdr_db,params,label", one row per stored individual.
std::string export_scatter(const std::filesystem::path& run_dir);
// CSV "label,sdr_db,params,genome": front 0 of the survivors of a generation.
std::string export_pareto(const std::filesystem::path& run_dir, std::size_t generation);

// Gene table, shape table, params and FLOPs.
std::string describe(const Genome& genome, const GenomeLayout& layout = {});

std::string group_thousands(std::uint64_t v);

}  // namespace emrp

#endif  // EMRP_SESSION_HPP_

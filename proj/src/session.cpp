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

#include "emrp/session.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "emrp/nsga2.hpp"

namespace emrp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kGenerationFormat = "emrp.generation/1";

void write_file_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RunLogError(fmt::format("cannot write {}", tmp.string()));
    out << content;
    out.flush();
    if (!out) throw RunLogError(fmt::format("cannot write {}", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw RunLogError(fmt::format("cannot write {}: {}", path.string(), ec.message()));
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw RunLogError(fmt::format("cannot read {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw RunLogError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace

// Config

std::string_view to_string(EvaluatorKind k) {
  switch (k) {
    case EvaluatorKind::surrogate: return "surrogate";
    case EvaluatorKind::complexity_only: return "complexity-only";
    case EvaluatorKind::worker: return "worker";
  }
  return "?";
}

EvaluatorKind evaluator_kind_from_string(std::string_view s) {
  if (s == "surrogate") return EvaluatorKind::surrogate;
  if (s == "complexity-only") return EvaluatorKind::complexity_only;
  if (s == "worker") return EvaluatorKind::worker;
  throw ConfigError(fmt::format("unknown evaluator '{}'", s));
}

Genome RunConfig::seed() const {
  return seed_genome.empty() ? emrp::seed_genome() : genome_from_text(seed_genome);
}

void RunConfig::validate() const {
  evolution.validate();
  if (dataset.empty() || dataset.find_first_of(",\n") != std::string::npos) {
    throw ConfigError("dataset tag must be non-empty and free of commas");
  }
  try {
    (void)seed();
  } catch (const CodecError& e) {
    throw ConfigError(fmt::format("seed_genome: {}", e.what()));
  }
  if (evaluator == EvaluatorKind::worker && resolve_worker_command(worker.command).empty()) {
    throw ConfigError(fmt::format("worker evaluator needs worker.command or {}", kWorkerEnvVar));
  }
}

json to_json(const RunConfig& c) {
  const EvolutionConfig& e = c.evolution;
  json w{{"command", c.worker.command},
         {"train_iterations", c.worker.train_iterations},
         {"batch_size", c.worker.batch_size},
         {"rng_seed", c.worker.rng_seed},
         {"initial_timeout_s", c.worker.initial_timeout_s},
         {"timeout_floor_s", c.worker.timeout_floor_s},
         {"timeout_multiplier", c.worker.timeout_multiplier},
         {"fixed_timeout_s", c.worker.fixed_timeout_s ? json(*c.worker.fixed_timeout_s) : json()},
         {"max_attempts", c.worker.max_attempts}};
  return json{{"scheme", to_string(e.scheme)},
              {"n", e.initial_population},
              {"u", e.max_seed_flips},
              {"N", e.max_generations},
              {"Z", e.population_limit},
              {"o_c", e.crossover_offspring},
              {"o_m", e.mutation_offspring},
              {"p1", e.crossover_prob},
              {"p2", e.mutation_prob},
              {"S", e.stagnation_patience},
              {"rng_seed", e.rng_seed},
              {"force_generations", e.force_generations},
              {"init_draw_budget", e.init_draw_budget},
              {"parallel_evaluations", e.parallel_evaluations},
              {"evaluator", to_string(c.evaluator)},
              {"dataset", c.dataset},
              {"seed_genome", c.seed_genome},
              {"worker", w}};
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  try {
    const Scheme scheme = scheme_from_string(j.value("scheme", std::string("single")));
    c.evolution = EvolutionConfig::defaults(scheme);
    EvolutionConfig& e = c.evolution;
    for (const auto& [key, v] : j.items()) {
      if (key == "scheme") continue;
      else if (key == "n") e.initial_population = v.get<std::size_t>();
      else if (key == "u") e.max_seed_flips = v.get<std::size_t>();
      else if (key == "N") e.max_generations = v.get<std::size_t>();
      else if (key == "Z") e.population_limit = v.get<std::size_t>();
      else if (key == "o_c") e.crossover_offspring = v.get<std::size_t>();
      else if (key == "o_m") e.mutation_offspring = v.get<std::size_t>();
      else if (key == "p1") e.crossover_prob = v.get<double>();
      else if (key == "p2") e.mutation_prob = v.get<double>();
      else if (key == "S") e.stagnation_patience = v.get<std::size_t>();
      else if (key == "rng_seed") e.rng_seed = v.get<std::uint64_t>();
      else if (key == "force_generations") e.force_generations = v.get<bool>();
      else if (key == "init_draw_budget") e.init_draw_budget = v.get<std::size_t>();
      else if (key == "parallel_evaluations") e.parallel_evaluations = v.get<std::size_t>();
      else if (key == "evaluator") c.evaluator = evaluator_kind_from_string(v.get<std::string>());
      else if (key == "dataset") c.dataset = v.get<std::string>();
      else if (key == "seed_genome") c.seed_genome = v.get<std::string>();
      else if (key == "worker") {
        if (!v.is_object()) throw ConfigError("worker must be an object");
        WorkerOptions& w = c.worker;
        for (const auto& [wk, wv] : v.items()) {
          if (wk == "command") w.command = wv.get<std::vector<std::string>>();
          else if (wk == "train_iterations") w.train_iterations = wv.get<int>();
          else if (wk == "batch_size") w.batch_size = wv.get<int>();
          else if (wk == "rng_seed") w.rng_seed = wv.get<std::uint64_t>();
          else if (wk == "initial_timeout_s") w.initial_timeout_s = wv.get<double>();
          else if (wk == "timeout_floor_s") w.timeout_floor_s = wv.get<double>();
          else if (wk == "timeout_multiplier") w.timeout_multiplier = wv.get<double>();
          else if (wk == "fixed_timeout_s") {
            if (wv.is_null()) w.fixed_timeout_s.reset();
            else w.fixed_timeout_s = wv.get<double>();
          } else if (wk == "max_attempts") w.max_attempts = wv.get<int>();
          else throw ConfigError(fmt::format("unknown worker key '{}'", wk));
        }
      } else {
        throw ConfigError(fmt::format("unknown config key '{}'", key));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bad config value: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.worker.train_iterations <= 0 || c.worker.batch_size <= 0 || c.worker.max_attempts <= 0) {
    throw ConfigError("worker train_iterations, batch_size and max_attempts must be positive");
  }
  return c;
}

RunConfig load_run_config(const fs::path& file) {
  json j;
  try {
    j = read_json_file(file);
  } catch (const RunLogError& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(j);
}

std::unique_ptr<Evaluator> make_evaluator(const RunConfig& config) {
  switch (config.evaluator) {
    case EvaluatorKind::surrogate: return std::make_unique<SurrogateEvaluator>();
    case EvaluatorKind::complexity_only: return std::make_unique<ComplexityEvaluator>();
    case EvaluatorKind::worker: return std::make_unique<WorkerEvaluator>(config.worker);
  }
  throw ConfigError("unknown evaluator");
}

// Labels

std::string IndividualLabel::str() const {
  return fmt::format("{}-{}-{}-{}", scheme == Scheme::single ? 'S' : 'M', generation, index, dataset);
}

IndividualLabel IndividualLabel::parse(std::string_view text) {
  static const std::regex re(R"(^([SM])-(0|[1-9][0-9]*)-([1-9][0-9]*)-([^,\s]+)$)");
  std::cmatch m;
  if (!std::regex_match(text.begin(), text.end(), m, re)) {
    throw std::invalid_argument(fmt::format("malformed label '{}'", text));
  }
  IndividualLabel l;
  l.scheme = m[1].str() == "S" ? Scheme::single : Scheme::multi;
  l.generation = std::stoull(m[2].str());
  l.index = std::stoull(m[3].str());
  l.dataset = m[4].str();
  return l;
}

// Generation files

GenerationRecord GenerationLog::record() const {
  GenerationRecord r;
  r.index = index;
  for (const auto& row : rows) {
    (row.survivor ? r.population : r.discarded).push_back(row.individual);
  }
  r.best_validation_sdr = best_validation_sdr;
  r.pareto_front_ids = pareto_front_ids;
  r.evaluations = evaluations;
  return r;
}

fs::path generation_path(const fs::path& run_dir, std::size_t index) {
  return run_dir / "generations" / fmt::format("gen_{:04d}.jsonl", index);
}

void write_generation(const fs::path& run_dir, const GenerationRecord& record, Scheme scheme,
                      std::string_view dataset, std::uint64_t next_eval_id) {
  std::string out = json{{"type", "generation"},
                         {"format", kGenerationFormat},
                         {"index", record.index},
                         {"scheme", to_string(scheme)}}
                        .dump();
  out += '\n';
  std::size_t position = 0;
  auto emit = [&](const Individual& ind, bool survivor) {
    const IndividualLabel label{scheme, record.index, position + 1, std::string(dataset)};
    out += json{{"type", "individual"},
                {"position", position},
                {"label", label.str()},
                {"eval_id", ind.eval_id},
                {"born", ind.born_generation},
                {"genome", genome_to_text(ind.genome)},
                {"sdr_db", ind.objectives.sdr_db},
                {"params", ind.objectives.params},
                {"survivor", survivor}}
               .dump();
    out += '\n';
    ++position;
  };
  for (const auto& ind : record.population) emit(ind, true);
  for (const auto& ind : record.discarded) emit(ind, false);
  out += json{{"type", "end"},
              {"count", position},
              {"next_eval_id", next_eval_id},
              {"best_validation_sdr",
               record.best_validation_sdr ? json(*record.best_validation_sdr) : json()},
              {"pareto_front_ids", record.pareto_front_ids},
              {"evaluations", record.evaluations}}
             .dump();
  out += '\n';
  fs::create_directories(run_dir / "generations");
  write_file_atomically(generation_path(run_dir, record.index), out);
}

GenerationLog read_generation(const fs::path& run_dir, std::size_t index) {
  const fs::path path = generation_path(run_dir, index);
  auto broken = [&](const std::string& why) {
    return RunLogError(fmt::format("generation {} is broken ({}): {}", index, path.string(), why));
  };
  std::ifstream in(path);
  if (!in) throw RunLogError(fmt::format("generation {} does not exist", index));

  GenerationLog log;
  log.index = index;
  bool header = false;
  bool footer = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (footer) throw broken(fmt::format("line {}: content after the end record", line_no));
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (!header) {
        if (type != "generation" || j.at("format").get<std::string>() != kGenerationFormat) {
          throw broken("missing header");
        }
        if (j.at("index").get<std::size_t>() != index) throw broken("header index mismatch");
        log.scheme = scheme_from_string(j.at("scheme").get<std::string>());
        header = true;
      } else if (type == "individual") {
        LoggedIndividual row;
        row.position = j.at("position").get<std::size_t>();
        if (row.position != log.rows.size()) throw broken(fmt::format("line {}: out of order", line_no));
        row.label = j.at("label").get<std::string>();
        row.survivor = j.at("survivor").get<bool>();
        row.individual.eval_id = j.at("eval_id").get<std::uint64_t>();
        row.individual.born_generation = j.at("born").get<std::size_t>();
        row.individual.genome = genome_from_text(j.at("genome").get<std::string>());
        row.individual.objectives = {j.at("sdr_db").get<double>(), j.at("params").get<std::uint64_t>()};
        log.rows.push_back(std::move(row));
      } else if (type == "end") {
        if (j.at("count").get<std::size_t>() != log.rows.size()) throw broken("row count mismatch");
        log.next_eval_id = j.at("next_eval_id").get<std::uint64_t>();
        if (!j.at("best_validation_sdr").is_null()) {
          log.best_validation_sdr = j.at("best_validation_sdr").get<double>();
        }
        log.pareto_front_ids = j.at("pareto_front_ids").get<std::vector<std::uint64_t>>();
        log.evaluations = j.at("evaluations").get<std::size_t>();
        footer = true;
      } else {
        throw broken(fmt::format("line {}: unknown record type '{}'", line_no, type));
      }
    } catch (const RunLogError&) {
      throw;
    } catch (const std::exception& e) {
      throw broken(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  if (!header) throw broken("empty file");
  if (!footer) throw broken("truncated (no end record)");
  return log;
}

std::vector<GenerationLog> read_generations(const fs::path& run_dir) {
  const fs::path dir = run_dir / "generations";
  std::vector<std::size_t> indices;
  if (fs::is_directory(dir)) {
    static const std::regex re(R"(^gen_([0-9]{4,})\.jsonl$)");
    for (const auto& entry : fs::directory_iterator(dir)) {
      std::smatch m;
      const std::string name = entry.path().filename().string();
      if (std::regex_match(name, m, re)) indices.push_back(std::stoull(m[1].str()));
    }
  }
  if (indices.empty()) throw RunLogError(fmt::format("{}: run has no generations", run_dir.string()));
  std::sort(indices.begin(), indices.end());
  std::vector<GenerationLog> logs;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] != k) throw RunLogError(fmt::format("generation {} is missing", k));
    logs.push_back(read_generation(run_dir, k));
  }
  return logs;
}

// Run loop

namespace {

json individual_json(const Individual& ind, const IndividualLabel& label) {
  return json{{"label", label.str()},
              {"eval_id", ind.eval_id},
              {"sdr_db", ind.objectives.sdr_db},
              {"params", ind.objectives.params},
              {"genome", genome_to_text(ind.genome)}};
}

json make_report(const RunConfig& config, const EvolutionState& state, const fs::path& run_dir,
                 const Evaluator& evaluator, const CacheStats& stats) {
  const Scheme scheme = config.evolution.scheme;
  json report{{"scheme", to_string(scheme)},
              {"evaluator", evaluator.identity()},
              {"dataset", config.dataset},
              {"generations_completed", state.current.index},
              {"evaluations", state.next_eval_id},
              {"cache", {{"requests", stats.requests}, {"hits", stats.hits},
                         {"evaluator_calls", stats.inner_calls}}}};
  if (config.evaluator == EvaluatorKind::surrogate) {
    report["note"] = "surrogate SDR is a synthetic test function, not a separation measurement";
  }
  if (scheme == Scheme::single) {
    report["validation_history"] = state.validation_history;
    report["stop_generation"] = state.stop_generation ? json(*state.stop_generation) : json();
    std::size_t output = 0;
    if (state.output_generation) {
      output = *state.output_generation;
    } else if (!state.validation_history.empty()) {
      const auto& h = state.validation_history;
      output = static_cast<std::size_t>(std::max_element(h.begin(), h.end()) - h.begin()) + 1;
    }
    report["output_generation"] = output;
    const GenerationLog log = read_generation(run_dir, output);
    const Individual best = log.record().population.front();
    report["best"] = individual_json(best, {scheme, output, 1, config.dataset});
  } else {
    json front = json::array();
    const auto& pop = state.current.population;
    const auto ids = pareto_front_ids(pop);
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (std::find(ids.begin(), ids.end(), pop[i].eval_id) != ids.end()) {
        front.push_back(individual_json(pop[i], {scheme, state.current.index, i + 1, config.dataset}));
      }
    }
    report["pareto_front"] = front;
  }
  return report;
}

json drive(const RunConfig& config, const fs::path& run_dir, std::optional<EvolutionState> state,
           const RunHooks& hooks) {
  const EvolutionConfig& ec = config.evolution;
  auto inner = make_evaluator(config);
  FitnessCache cache(run_dir / "cache.jsonl");
  CachedEvaluator evaluator(*inner, cache);

  auto persist = [&](const EvolutionState& s) {
    write_generation(run_dir, s.current, ec.scheme, config.dataset, s.next_eval_id);
    if (hooks.on_generation) hooks.on_generation(s.current);
  };
  if (!state) {
    state = start_evolution(config.seed(), ec, evaluator);
    persist(*state);
  }
  while (!evolution_finished(*state, ec)) {
    advance_generation(*state, ec, evaluator);
    persist(*state);
  }
  json report = make_report(config, *state, run_dir, *inner, evaluator.stats());
  write_file_atomically(run_dir / "report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace

json run(const RunConfig& config, const fs::path& run_dir, const RunHooks& hooks) {
  config.validate();
  std::error_code ec;
  fs::create_directories(run_dir / "generations", ec);
  if (ec) throw RunLogError(fmt::format("cannot create {}: {}", run_dir.string(), ec.message()));
  if (!fs::is_empty(run_dir / "generations")) {
    throw RunLogError(
        fmt::format("{} already holds generations; use resume", run_dir.string()));
  }
  write_file_atomically(run_dir / "config.json", to_json(config).dump(2) + "\n");
  return drive(config, run_dir, std::nullopt, hooks);
}

json resume(const fs::path& run_dir, const RunHooks& hooks) {
  const RunConfig config = load_run_config(run_dir / "config.json");
  config.validate();
  const std::vector<GenerationLog> logs = read_generations(run_dir);
  const Scheme scheme = config.evolution.scheme;

  EvolutionState state;
  for (const auto& log : logs) {
    if (log.scheme != scheme) {
      throw RunLogError(fmt::format("generation {} is broken: scheme differs from config", log.index));
    }
    if (scheme == Scheme::single && log.index > 0) {
      if (!log.best_validation_sdr) {
        throw RunLogError(fmt::format("generation {} is broken: no validation SDR", log.index));
      }
      state.validation_history.push_back(*log.best_validation_sdr);
    }
  }
  state.current = logs.back().record();
  state.next_eval_id = logs.back().next_eval_id;
  if (scheme == Scheme::single) {
    const StopDecision d = stopping_check(state.validation_history, config.evolution.stagnation_patience);
    if (d.stop) {
      state.stop_generation = d.stop_index + 1;
      state.output_generation = d.output_index + 1;
    }
  }
  return drive(config, run_dir, std::move(state), hooks);
}

// Exports

std::string export_scatter(const fs::path& run_dir) {
  const auto logs = read_generations(run_dir);
  std::string out = "generation,sdr_db,params,label\n";
  for (const auto& log : logs) {
    for (const auto& row : log.rows) {
      out += fmt::format("{},{},{},{}\n", log.index, row.individual.objectives.sdr_db,
                         row.individual.objectives.params, row.label);
    }
  }
  return out;
}

std::string export_pareto(const fs::path& run_dir, std::size_t generation) {
  const GenerationLog log = read_generation(run_dir, generation);
  std::vector<const LoggedIndividual*> survivors;
  std::vector<Objectives> objs;
  for (const auto& row : log.rows) {
    if (!row.survivor) continue;
    survivors.push_back(&row);
    objs.push_back(row.individual.objectives);
  }
  std::string out = "label,sdr_db,params,genome\n";
  const auto fronts = fast_nondominated_sort(objs);
  if (fronts.empty()) return out;
  Front front = fronts.front();
  std::sort(front.begin(), front.end());
  for (std::size_t i : front) {
    const LoggedIndividual& r = *survivors[i];
    out += fmt::format("{},{},{},{}\n", r.label, r.individual.objectives.sdr_db,
                       r.individual.objectives.params, genome_to_text(r.individual.genome));
  }
  return out;
}

// Describe

std::string group_thousands(std::uint64_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

namespace {

std::string group_text(const ConvGroupGene& g) {
  return fmt::format("S={} A={},{}", g.skip ? 1 : 0, to_string(g.first), to_string(g.second));
}

std::string shape_text(const TensorShape& s) {
  return fmt::format("{}x{}x{}", s.freq, s.time, s.channels);
}

}  // namespace

std::string describe(const Genome& genome, const GenomeLayout& layout) {
  const GeneRecord rec = decode_genome(genome, layout);
  const ArchitectureSpec arch = build_architecture(rec);
  const std::string bits = genome.to_bitstring();

  std::ostringstream os;
  os << "genome  " << genome_to_text(genome, layout) << "\n\n";
  os << fmt::format("{:<10} {:<12} {}\n", "gene", "bits", "value");
  os << fmt::format("{:<10} {:<12} {} channels\n", "FC", bits.substr(0, GenomeLayout::kFcBits),
                    rec.fc_channels);
  std::string skips;
  for (std::size_t d = 2; d <= layout.num_blocks; ++d) {
    for (std::size_t s = 1; s < d; ++s) {
      if (rec.skip(s, d)) skips += fmt::format("{}{}->{}", skips.empty() ? "" : " ", s, d);
    }
  }
  os << fmt::format("{:<10} {:<12} {}\n", "FS", bits.substr(GenomeLayout::kFcBits, layout.fs_bits()),
                    skips.empty() ? "no inter-block skips" : skips);
  for (std::size_t b = 0; b < rec.blocks.size(); ++b) {
    const BlockGene& block = rec.blocks[b];
    std::size_t at = layout.block_offset(b);
    auto take = [&](std::size_t n) {
      std::string s = bits.substr(at, n);
      at += n;
      return s;
    };
    const std::string cg_bits = take(GenomeLayout::kCgBits);
    os << fmt::format("{:<10} {:<12} {}\n", fmt::format("B{}.CG", b + 1), cg_bits,
                      block.has_cg() ? fmt::format("C={} {}", block.cg_channels, group_text(block.cg))
                                     : "C=none (pass-through)");
    for (std::size_t p = 0; p < block.pls.size(); ++p) {
      const PoolingLayerGene& pl = block.pls[p];
      const std::string v = fmt::format("T={} F={} PC={} {}", pl.pool_time, pl.pool_freq,
                                        pl.channels, group_text(pl.pcg));
      os << fmt::format("{:<10} {:<12} {}\n", fmt::format("B{}.PL{}", b + 1, p + 1),
                        take(GenomeLayout::kPlBits), pl.dormant() ? "dormant (" + v + ")" : v);
    }
    os << fmt::format("{:<10} {:<12} {}\n", fmt::format("B{}.PCG", b + 1),
                      take(GenomeLayout::kPcgBits), group_text(block.pcg));
  }

  os << fmt::format("\n{:<20} {:<10} {:<14} {}\n", "layer", "kind", "input", "output");
  for (const LayerShape& l : propagate_shapes(arch)) {
    os << fmt::format("{:<20} {:<10} {:<14} {}\n", l.name, to_string(l.kind), shape_text(l.in),
                      shape_text(l.out));
  }
  const std::uint64_t params = count_params(arch);
  const std::uint64_t flops = count_flops(arch);
  os << fmt::format("\n{} params ({:.2f} M)\n", group_thousands(params), params / 1e6);
  os << fmt::format("{} FLOPs ({:.2f} G)\n", group_thousands(flops), flops / 1e9);
  return os.str();
}

}  // namespace emrp

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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "emrp/session.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_all(const std::string& path) {
  if (path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path));
  out << content;
}

void print_generation(const emrp::GenerationRecord& g) {
  const auto& best = g.population.front().objectives;
  std::string extra;
  if (g.best_validation_sdr) extra = fmt::format(" validation={:.4f}", *g.best_validation_sdr);
  if (!g.pareto_front_ids.empty()) extra += fmt::format(" front={}", g.pareto_front_ids.size());
  fmt::print(stderr, "generation {:>3}: evaluations={} top sdr={:.4f} params={}{}\n", g.index,
             g.evaluations, best.sdr_db, best.params, extra);
}

void print_summary(const json& report) {
  std::cout << report.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary search for mask-based source-separation networks"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "No per-generation progress on stderr");

  // describe
  auto* describe = app.add_subcommand("describe", "Print the decoded architecture of a genome");
  std::string describe_text;
  bool describe_seed = false;
  describe->add_option("genome", describe_text, "Genome text ('|' and spaces are ignored)");
  describe->add_flag("--seed", describe_seed, "Describe the built-in seed genome");

  // encode
  auto* encode = app.add_subcommand("encode", "Encode a gene record (JSON) as genome text");
  std::string encode_record_path;
  bool encode_seed = false;
  encode->add_option("--record", encode_record_path, "Gene record JSON file, '-' for stdin");
  encode->add_flag("--seed", encode_seed, "Print the built-in seed genome");

  // evolve
  auto* evolve = app.add_subcommand("evolve", "Start a new search in a run directory");
  std::string scheme;
  std::string config_path;
  std::string evaluator;
  std::string run_dir;
  std::string seed_text;
  std::optional<std::uint64_t> rng_seed;
  evolve->add_option("--scheme", scheme, "single or multi")->check(CLI::IsMember({"single", "multi"}));
  evolve->add_option("--config", config_path, "JSON config file");
  evolve->add_option("--evaluator", evaluator, "Fitness backend")
      ->check(CLI::IsMember({"surrogate", "complexity-only", "worker"}));
  evolve->add_option("--run-dir", run_dir, "Output directory")->required();
  evolve->add_option("--seed-genome", seed_text, "Genome text of the starting architecture");
  evolve->add_option("--rng-seed", rng_seed, "Random seed");

  // resume
  auto* resume = app.add_subcommand("resume", "Continue a run from its last complete generation");
  resume->add_option("--run-dir", run_dir, "Run directory")->required();

  // exports
  std::string output;
  auto* scatter = app.add_subcommand("export-scatter", "All individuals as generation,sdr_db,params,label");
  scatter->add_option("--run-dir", run_dir, "Run directory")->required();
  scatter->add_option("-o,--output", output, "Output CSV (default stdout)");

  auto* pareto = app.add_subcommand("export-pareto", "Non-dominated survivors of one generation");
  std::optional<std::size_t> generation;
  pareto->add_option("--run-dir", run_dir, "Run directory")->required();
  pareto->add_option("--generation", generation, "Generation index (default: last)");
  pareto->add_option("-o,--output", output, "Output CSV (default stdout)");

  // worker-check
  auto* check = app.add_subcommand("worker-check", "Handshake with a worker and evaluate the seed once");
  std::vector<std::string> worker_cmd;
  check->add_option("--config", config_path, "Config file providing worker settings");
  check->add_option("command", worker_cmd, "Worker command line (after --)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (describe->parsed()) {
      if (describe_seed == !describe_text.empty()) {
        throw CLI::ValidationError("describe", "give either a genome or --seed");
      }
      const emrp::Genome g = describe_seed ? emrp::seed_genome() : emrp::genome_from_text(describe_text);
      std::cout << emrp::describe(g);
    } else if (encode->parsed()) {
      if (encode_seed == !encode_record_path.empty()) {
        throw CLI::ValidationError("encode", "give either --record or --seed");
      }
      emrp::GeneRecord rec = encode_seed ? emrp::seed_record()
                                         : json::parse(read_all(encode_record_path)).get<emrp::GeneRecord>();
      std::cout << emrp::genome_to_text(emrp::encode_record(rec)) << '\n';
    } else if (evolve->parsed()) {
      json cfg = config_path.empty() ? json::object() : json::parse(read_all(config_path));
      if (!scheme.empty()) {
        // A scheme flag picks that scheme's defaults for keys the file leaves out.
        cfg["scheme"] = scheme;
      }
      if (!evaluator.empty()) cfg["evaluator"] = evaluator;
      if (!seed_text.empty()) cfg["seed_genome"] = seed_text;
      if (rng_seed) cfg["rng_seed"] = *rng_seed;
      const emrp::RunConfig config = emrp::run_config_from_json(cfg);
      emrp::RunHooks hooks;
      if (!quiet) hooks.on_generation = print_generation;
      print_summary(emrp::run(config, run_dir, hooks));
    } else if (resume->parsed()) {
      emrp::RunHooks hooks;
      if (!quiet) hooks.on_generation = print_generation;
      print_summary(emrp::resume(run_dir, hooks));
    } else if (scatter->parsed()) {
      write_output(output, emrp::export_scatter(run_dir));
    } else if (pareto->parsed()) {
      const std::size_t g = generation ? *generation : emrp::read_generations(run_dir).size() - 1;
      write_output(output, emrp::export_pareto(run_dir, g));
    } else if (check->parsed()) {
      emrp::WorkerOptions opts;
      if (!config_path.empty()) opts = emrp::load_run_config(config_path).worker;
      if (!worker_cmd.empty()) opts.command = worker_cmd;
      opts.fixed_timeout_s = opts.fixed_timeout_s.value_or(60.0);
      emrp::WorkerEvaluator ev(opts);
      if (ev.client().options().command.empty()) {
        throw std::runtime_error(fmt::format("no worker command given (use -- CMD, --config or {})",
                                             emrp::kWorkerEnvVar));
      }
      const emrp::Hello hello = ev.client().handshake();
      fmt::print("handshake ok: protocol={} worker={} modes={}\n", hello.protocol, hello.worker,
                 fmt::join(hello.modes, ","));
      const emrp::Objectives o = ev.evaluate(emrp::seed_genome(), emrp::Split::test);
      fmt::print("seed evaluation ok: sdr_db={} params={}\n", o.sdr_db, o.params);
      ev.client().stop();
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}

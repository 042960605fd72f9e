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

#include "emrp/fitness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace emrp {

std::string_view to_string(Split s) { return s == Split::test ? "test" : "validation"; }

Split split_from_string(std::string_view s) {
  if (s == "test") return Split::test;
  if (s == "validation") return Split::validation;
  throw std::invalid_argument(fmt::format("unknown split '{}'", s));
}

std::uint64_t evaluate_complexity(const Genome& genome, const GenomeLayout& layout) {
  return count_params(build_architecture(genome, layout));
}

double surrogate_sdr(const ArchitectureSpec& arch) {
  std::set<int> areas;
  int sigmoids = 0;
  auto count = [&](const ConvGroupSpec& g) {
    sigmoids += (g.first == Activation::sigmoid) + (g.second == Activation::sigmoid);
  };
  for (const BlockSpec& b : arch.blocks) {
    if (b.cg) count(*b.cg);
    for (const PoolingLayerSpec& pl : b.active_pls) {
      areas.insert(pl.pool_time * pl.pool_freq);
      count(pl.pcg);
    }
    count(b.block_pcg);
  }
  const double params = static_cast<double>(count_params(arch));
  return 6.0 + 2.0 * std::tanh(std::log(params / 1e6)) + 0.3 * static_cast<double>(areas.size()) -
         0.2 * sigmoids;
}

double surrogate_sdr(const Genome& genome, const GenomeLayout& layout) {
  return surrogate_sdr(build_architecture(genome, layout));
}

Objectives ComplexityEvaluator::evaluate(const Genome& genome, Split) {
  return {0.0, evaluate_complexity(genome, layout_)};
}

Objectives SurrogateEvaluator::evaluate(const Genome& genome, Split) {
  const auto arch = build_architecture(genome, layout_);
  return {surrogate_sdr(arch), count_params(arch)};
}

// FitnessCache

FitnessCache::FitnessCache(std::filesystem::path file, WarningSink warn) : file_(file) {
  if (!warn) {
    warn = [](std::string_view msg) { fmt::print(stderr, "warning: {}\n", msg); };
  }
  if (std::filesystem::exists(file)) {
    std::ifstream in(file);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        const auto bits = j.at("genome").get<std::string>();
        Objectives o{j.at("sdr_db").get<double>(), j.at("params").get<std::uint64_t>()};
        if (!std::isfinite(o.sdr_db)) throw std::invalid_argument("non-finite sdr");
        entries_[key(bits, j.at("evaluator").get<std::string>(),
                     split_from_string(j.at("split").get<std::string>()))] = o;
      } catch (const std::exception& e) {
        ++skipped_lines_;
        warn(fmt::format("{}:{}: skipping corrupt cache line ({})", file.string(), line_no,
                         e.what()));
      }
    }
  }
  out_.open(file, std::ios::app);
  if (!out_) throw std::runtime_error(fmt::format("cannot open cache file {}", file.string()));
}

std::string FitnessCache::key(std::string_view bits, std::string_view evaluator, Split split) {
  return fmt::format("{}|{}|{}", evaluator, to_string(split), bits);
}

std::optional<Objectives> FitnessCache::get(const Genome& genome, std::string_view evaluator,
                                            Split split) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key(genome.to_bitstring(), evaluator, split));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FitnessCache::put(const CacheEntry& entry) {
  std::lock_guard lock(mutex_);
  entries_[key(entry.bits, entry.evaluator, entry.split)] = entry.objectives;
  if (out_.is_open()) {
    nlohmann::json j{{"genome", entry.bits},
                     {"evaluator", entry.evaluator},
                     {"split", to_string(entry.split)},
                     {"sdr_db", entry.objectives.sdr_db},
                     {"params", entry.objectives.params},
                     {"timestamp", entry.timestamp}};
    out_ << j.dump() << '\n';
    out_.flush();
  }
}

void FitnessCache::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
  if (file_) {
    out_.close();
    out_.open(*file_, std::ios::trunc);
  }
}

std::size_t FitnessCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

// CachedEvaluator

Objectives CachedEvaluator::evaluate(const Genome& genome, Split split) {
  ++requests_;
  const std::string id = inner_.identity();
  if (auto hit = cache_.get(genome, id, split)) {
    ++hits_;
    return *hit;
  }
  ++inner_calls_;
  const Objectives o = inner_.evaluate(genome, split);
  const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  cache_.put({genome.to_bitstring(), id, split, o, now});
  return o;
}

}  // namespace emrp

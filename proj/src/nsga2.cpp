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

#include "emrp/nsga2.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace emrp {

std::vector<Front> fast_nondominated_sort(std::span<const Objectives> points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> dominated_by_me(n);
  std::vector<std::size_t> domination_count(n, 0);
  std::vector<Front> fronts;
  if (n == 0) return fronts;

  Front current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(points[p], points[q])) {
        dominated_by_me[p].push_back(q);
      } else if (dominates(points[q], points[p])) {
        ++domination_count[p];
      }
    }
    if (domination_count[p] == 0) current.push_back(p);
  }

  while (!current.empty()) {
    Front next;
    for (std::size_t p : current) {
      for (std::size_t q : dominated_by_me[p]) {
        if (--domination_count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(std::span<const Objectives> points, const Front& front) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = front.size();
  std::vector<double> distance(n, 0.0);
  if (n <= 2) {
    std::fill(distance.begin(), distance.end(), kInf);
    return distance;
  }

  auto accumulate = [&](auto value) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    distance[order.front()] = kInf;
    distance[order.back()] = kInf;
    const double range = value(order.back()) - value(order.front());
    if (range <= 0.0) return;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (distance[order[k]] == kInf) continue;
      distance[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
    }
  };
  accumulate([&](std::size_t i) { return points[front[i]].sdr_db; });
  accumulate([&](std::size_t i) { return static_cast<double>(points[front[i]].params); });
  return distance;
}

std::vector<std::size_t> crowded_order(std::span<const Objectives> points) {
  const std::size_t n = points.size();
  std::vector<std::size_t> rank(n, 0);
  std::vector<double> crowd(n, 0.0);
  const auto fronts = fast_nondominated_sort(points);
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    const auto d = crowding_distance(points, fronts[r]);
    for (std::size_t k = 0; k < fronts[r].size(); ++k) {
      rank[fronts[r][k]] = r;
      crowd[fronts[r][k]] = d[k];
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rank[a] != rank[b]) return rank[a] < rank[b];
    if (crowd[a] != crowd[b]) return crowd[a] > crowd[b];
    return a < b;
  });
  return order;
}

double hypervolume(std::span<const Objectives> points, double ref_sdr, double ref_params) {
  std::vector<std::pair<double, double>> pts;  // (params, sdr)
  for (const auto& p : points) {
    const double params = static_cast<double>(p.params);
    if (p.sdr_db > ref_sdr && params < ref_params) pts.emplace_back(params, p.sdr_db);
  }
  // Sweep by params ascending; each point adds the slab above the best sdr seen so far.
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.first < b.first || (a.first == b.first && a.second > b.second);
  });
  double volume = 0.0;
  double best_sdr = ref_sdr;
  for (const auto& [params, sdr] : pts) {
    if (sdr <= best_sdr) continue;
    volume += (ref_params - params) * (sdr - best_sdr);
    best_sdr = sdr;
  }
  return volume;
}

}  // namespace emrp

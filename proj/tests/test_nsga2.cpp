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
#include <limits>
#include <random>

#include "emrp/nsga2.hpp"
#include "oracles.hpp"

using namespace emrp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<oracle::Point> to_points(const std::vector<Objectives>& objs) {
  std::vector<oracle::Point> pts;
  for (const auto& o : objs) pts.push_back({o.sdr_db, static_cast<double>(o.params)});
  return pts;
}

// Coarse grids produce plenty of ties and duplicates.
std::vector<Objectives> random_set(std::mt19937_64& rng, std::size_t n) {
  std::vector<Objectives> out(n);
  const bool coarse = rng() % 2 == 0;
  for (auto& o : out) {
    if (coarse) {
      o.sdr_db = static_cast<double>(rng() % 8) * 0.5;
      o.params = 1000 * (rng() % 8);
    } else {
      o.sdr_db = std::uniform_real_distribution<double>(-5, 15)(rng);
      o.params = 100000 + rng() % 5000000;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("dominance") {
  CHECK(dominates({10, 1}, {9, 1}));
  CHECK(dominates({10, 1}, {10, 2}));
  CHECK_FALSE(dominates({10, 1}, {10, 1}));
  CHECK_FALSE(dominates({10, 2}, {11, 3}));
}

TEST_CASE("fast non-dominated sort examples") {
  SUBCASE("three points") {
    const std::vector<Objectives> pts{{10, 1'000'000}, {11, 2'000'000}, {9, 3'000'000}};
    const auto fronts = fast_nondominated_sort(pts);
    REQUIRE(fronts.size() == 2);
    CHECK(fronts[0] == Front{0, 1});
    CHECK(fronts[1] == Front{2});
  }
  SUBCASE("single individual") {
    const std::vector<Objectives> pts{{3, 4}};
    CHECK(fast_nondominated_sort(pts) == std::vector<Front>{{0}});
  }
  SUBCASE("duplicates share a front") {
    const std::vector<Objectives> pts{{5, 10}, {5, 10}, {4, 20}};
    const auto fronts = fast_nondominated_sort(pts);
    CHECK(fronts[0] == Front{0, 1});
    CHECK(fronts[1] == Front{2});
  }
  SUBCASE("empty") { CHECK(fast_nondominated_sort({}).empty()); }
}

TEST_CASE("crowding distance examples") {
  SUBCASE("fronts of two or fewer are all boundary") {
    const std::vector<Objectives> pts{{1, 5}, {2, 6}};
    CHECK(crowding_distance(pts, {0, 1}) == std::vector<double>{kInf, kInf});
    CHECK(crowding_distance(pts, {1}) == std::vector<double>{kInf});
  }
  SUBCASE("three collinear equally spaced points") {
    const std::vector<Objectives> pts{{1, 10}, {2, 20}, {3, 30}};
    const auto d = crowding_distance(pts, {0, 1, 2});
    CHECK(d[0] == kInf);
    CHECK(d[2] == kInf);
    // (3-1)/(3-1) + (30-10)/(30-10)
    CHECK(d[1] == doctest::Approx(2.0));
  }
  SUBCASE("identical vectors give zero interior distance") {
    const std::vector<Objectives> pts{{1, 1}, {1, 1}, {1, 1}, {1, 1}};
    const auto d = crowding_distance(pts, {0, 1, 2, 3});
    CHECK(d[0] == kInf);
    CHECK(d[1] == 0.0);
    CHECK(d[2] == 0.0);
    CHECK(d[3] == kInf);
  }
}

TEST_CASE("crowded order ranks fronts first") {
  const std::vector<Objectives> pts{{9, 3}, {10, 1}, {11, 2}, {8, 4}, {12, 5}};
  const auto order = crowded_order(pts);
  // F0 = {1, 2, 4}: 1 and 4 are boundary, 2 interior; F1 = {0}; F2 = {3}
  CHECK(order == std::vector<std::size_t>{1, 4, 2, 0, 3});
}

TEST_CASE("hypervolume") {
  const std::vector<Objectives> pts{{2, 4}, {1, 2}};
  // ref (0, 10): union of [4,10]x[0,2] and [2,10]x[0,1]
  CHECK(hypervolume(pts, 0, 10) == doctest::Approx(6 * 2 + 2 * 1));
  const std::vector<Objectives> dominated{{2, 4}, {1, 2}, {0.5, 6}};
  CHECK(hypervolume(dominated, 0, 10) == hypervolume(pts, 0, 10));
  CHECK(hypervolume(std::vector<Objectives>{{-1, 4}}, 0, 10) == 0.0);
}

TEST_CASE("property: sort and crowding agree with brute-force oracles") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto objs = random_set(rng, 1 + rng() % 60);
    const auto pts = to_points(objs);
    const auto rank = oracle::peel_fronts(pts);
    const auto fronts = fast_nondominated_sort(objs);

    std::size_t total = 0;
    for (std::size_t f = 0; f < fronts.size(); ++f) {
      total += fronts[f].size();
      for (std::size_t i : fronts[f]) CHECK(rank[i] == static_cast<int>(f));

      std::vector<oracle::Point> front_pts;
      for (std::size_t i : fronts[f]) front_pts.push_back(pts[i]);
      const auto expected = oracle::crowding(front_pts);
      const auto got = crowding_distance(objs, fronts[f]);
      for (std::size_t k = 0; k < got.size(); ++k) {
        if (std::isinf(expected[k])) {
          CHECK(std::isinf(got[k]));
        } else {
          CHECK(got[k] == doctest::Approx(expected[k]).epsilon(1e-12));
        }
      }
    }
    CHECK(total == objs.size());
  }
}

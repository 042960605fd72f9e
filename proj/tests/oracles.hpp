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

// Test-only reference implementations. None of these call into the code path
// they check: the layer enumerator reads raw genome bits, and the Pareto
// oracles work from the dominance definition alone.

#ifndef EMRP_TESTS_ORACLES_HPP_
#define EMRP_TESTS_ORACLES_HPP_

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "emrp/genome.hpp"

namespace emrp::oracle {

// The Table II seed, transcribed bit by bit:
// FC=11, FS=0-00-000-0000, then per block
// CG 11 1 0 0 | PL1 00 11 11 1 0 0 | PL2 00 00 11 1 0 0 | PCG 1 0 0.
inline std::string seed_text() {
  const std::string block = "11100" "001111100" "000011100" "100";
  std::string s = "11|0000000000";
  for (int i = 0; i < 5; ++i) s += "|" + block;
  return s;
}

struct Conv {
  long long cin;
  long long cout;
  long long pixels;
};

// Lists every convolution of the network encoded by `bits` (default layout:
// 5 blocks, 2 PL slots) straight from the bit positions.
inline std::vector<Conv> enumerate_convs(const std::string& bits) {
  auto two = [&](std::size_t pos, const int (&table)[4]) {
    const std::string code = bits.substr(pos, 2);
    if (code == "00") return table[0];
    if (code == "01") return table[1];
    if (code == "11") return table[2];
    return table[3];
  };
  static const int fc_t[4] = {32, 64, 128, 256};
  static const int cg_t[4] = {0, 32, 64, 128};
  static const int ps_t[4] = {1, 4, 16, 64};
  static const int pc_t[4] = {16, 32, 64, 128};
  const long long full = 512LL * 64LL;

  std::vector<Conv> convs;
  const long long fc = two(0, fc_t);
  long long in = 1;
  for (int b = 0; b < 5; ++b) {
    const std::size_t base = 12 + 26 * b;
    const long long cg = two(base, cg_t);
    long long trunk = in;
    if (cg != 0) {
      convs.push_back({in, cg, full});
      convs.push_back({cg, cg, full});
      trunk = cg;
    }
    long long concat = trunk;
    for (int j = 0; j < 2; ++j) {
      const std::size_t p = base + 5 + 9 * j;
      const long long t = two(p, ps_t);
      const long long f = two(p + 2, ps_t);
      if (t == 1 && f == 1) continue;
      const long long pc = two(p + 4, pc_t);
      const long long pooled = (512 / f) * (64 / t);
      convs.push_back({trunk, pc, pooled});
      convs.push_back({pc, pc, pooled});
      concat += pc;
    }
    convs.push_back({concat, fc, full});
    convs.push_back({fc, fc, full});
    in = fc;
  }
  convs.push_back({fc, 2, full});
  return convs;
}

inline std::uint64_t params(const std::string& bits) {
  std::uint64_t total = 0;
  for (const Conv& c : enumerate_convs(bits)) total += 9 * c.cin * c.cout + c.cout;
  return total;
}

inline std::uint64_t flops(const std::string& bits) {
  std::uint64_t total = 0;
  for (const Conv& c : enumerate_convs(bits)) total += 2 * 9 * c.cin * c.cout * c.pixels;
  return total;
}

inline Genome random_genome(std::mt19937_64& rng, std::size_t n = 142) {
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1U);
  return Genome(std::move(bits));
}

// Pareto oracles over (sdr: maximize, params: minimize).
struct Point {
  double sdr;
  double params;
};

inline bool dominates(const Point& a, const Point& b) {
  return a.sdr >= b.sdr && a.params <= b.params && (a.sdr > b.sdr || a.params < b.params);
}

// Front index per point by repeatedly peeling the non-dominated set.
inline std::vector<int> peel_fronts(const std::vector<Point>& pts) {
  std::vector<int> rank(pts.size(), -1);
  std::size_t assigned = 0;
  for (int level = 0; assigned < pts.size(); ++level) {
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (rank[i] != -1) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
        if (j != i && rank[j] == -1 && dominates(pts[j], pts[i])) dominated = true;
      }
      if (!dominated) current.push_back(i);
    }
    for (auto i : current) rank[i] = level;
    assigned += current.size();
  }
  return rank;
}

// Crowding distance of every member of `front`, computed per objective by
// locating each point's nearest neighbours by value (ties resolved by the
// member order, matching a stable sort).
inline std::vector<double> crowding(const std::vector<Point>& front) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = front.size();
  std::vector<double> d(n, 0.0);
  if (n <= 2) return std::vector<double>(n, inf);
  for (int obj = 0; obj < 2; ++obj) {
    auto val = [&](std::size_t i) { return obj == 0 ? front[i].sdr : front[i].params; };
    // position of i in a stable ascending order
    auto before = [&](std::size_t a, std::size_t b) {
      return val(a) < val(b) || (val(a) == val(b) && a < b);
    };
    double lo = val(0), hi = val(0);
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, val(i));
      hi = std::max(hi, val(i));
    }
    for (std::size_t i = 0; i < n; ++i) {
      long below = -1, above = -1;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (before(j, i) && (below < 0 || before(static_cast<std::size_t>(below), j))) below = static_cast<long>(j);
        if (before(i, j) && (above < 0 || before(j, static_cast<std::size_t>(above)))) above = static_cast<long>(j);
      }
      if (below < 0 || above < 0) {
        d[i] = inf;
      } else if (hi > lo && d[i] != inf) {
        d[i] += (val(static_cast<std::size_t>(above)) - val(static_cast<std::size_t>(below))) / (hi - lo);
      }
    }
  }
  return d;
}

}  // namespace emrp::oracle

#endif  // EMRP_TESTS_ORACLES_HPP_

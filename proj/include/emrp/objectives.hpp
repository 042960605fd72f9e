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

#ifndef EMRP_OBJECTIVES_HPP_
#define EMRP_OBJECTIVES_HPP_

#include <cstdint>

namespace emrp {

// Fitness of one architecture: mean SDR in dB (maximized) and trainable
// parameter count (minimized).
struct Objectives {
  double sdr_db = 0.0;
  std::uint64_t params = 0;

  friend bool operator==(const Objectives&, const Objectives&) = default;
};

// a dominates b: no worse in both objectives and strictly better in one.
inline bool dominates(const Objectives& a, const Objectives& b) {
  return a.sdr_db >= b.sdr_db && a.params <= b.params &&
         (a.sdr_db > b.sdr_db || a.params < b.params);
}

}  // namespace emrp

#endif  // EMRP_OBJECTIVES_HPP_

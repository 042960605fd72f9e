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

#ifndef EMRP_NSGA2_HPP_
#define EMRP_NSGA2_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "emrp/objectives.hpp"

namespace emrp {

using Front = std::vector<std::size_t>;

/// Non-dominated sorting of Deb et al. Returns fronts F0, F1, ... as indices
/// into `points`; members of each front are in ascending index order.
std::vector<Front> fast_nondominated_sort(std::span<const Objectives> points);

/// Crowding distance of each member of `front` (aligned with `front`).
///
/// Per objective the front is stably sorted by value; the two boundary
/// members get +inf and interior members accumulate the normalized gap
/// between their neighbours. An objective with zero range adds nothing.
std::vector<double> crowding_distance(std::span<const Objectives> points, const Front& front);

/// Survival order for the whole pool: front rank ascending, then crowding
/// distance descending, then index ascending.
std::vector<std::size_t> crowded_order(std::span<const Objectives> points);

/// Area dominated by the non-dominated subset of `points` and bounded by
/// the reference point (sdr = ref_sdr, params = ref_params). Points that do
/// not improve on the reference in both objectives contribute nothing.
double hypervolume(std::span<const Objectives> points, double ref_sdr, double ref_params);

}  // namespace emrp

#endif  // EMRP_NSGA2_HPP_

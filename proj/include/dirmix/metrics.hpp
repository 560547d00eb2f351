// Copyright 2026 the dirmix authors
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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dirmix/feature_io.hpp"

namespace dirmix {

struct ContingencyTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint64_t> counts;  // row-major rows×cols
    std::vector<std::uint64_t> row_sums;
    std::vector<std::uint64_t> col_sums;
    std::uint64_t total = 0;

    std::uint64_t at(std::size_t i, std::size_t j) const { return counts[i * cols + j]; }
};

/// Rows index labels of `a`, columns labels of `b`; sized by the largest label
/// present. Throws DimensionMismatch.
ContingencyTable contingency(const LabelMap& a, const LabelMap& b);

/// Exact pair-count arithmetic. The denominator vanishes only when both
/// partitions are the same trivial partition, which scores 1.
double adjusted_rand_index(const LabelMap& a, const LabelMap& b);

/// Pixels whose label differs from the right or bottom neighbor.
std::vector<std::uint8_t> boundary_pixels(const LabelMap& map);

/// 0.0075 × image diagonal.
double default_match_radius(std::uint32_t height, std::uint32_t width);

struct BoundaryScore {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

/// Greedy nearest-first matching within `match_radius` (Euclidean, pixels).
/// Precision counts predicted pixels matched in any reference; recall is
/// averaged over references. Throws DimensionMismatch / InvalidArgument.
BoundaryScore boundary_score(const LabelMap& pred, std::span<const LabelMap> refs, double match_radius);
double boundary_f_score(const LabelMap& pred, std::span<const LabelMap> refs, double match_radius);

}  // namespace dirmix

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

#include <cstddef>

#include <Eigen/Dense>

namespace dirmix {

/// Sample-major data matrix: one feature vector per row, contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N×K probability field. Column-major so each component's map is one
/// contiguous plane over the pixel lattice.
using ProbabilityField = Eigen::MatrixXd;

/// Pixel lattice of one layer. Pixels are indexed row-major: n = y·width + x.
struct GridShape {
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t size() const noexcept { return height * width; }
    friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Counters accumulated over a fit. The invariant extrema are what the
/// acceptance suite inspects after every run.
struct Diagnostics {
    std::size_t empty_component_resets = 0;
    std::size_t dof_bracket_failures = 0;
    double max_simplex_error = 0.0;
    double min_local_variance = 0.0;
    bool local_variance_seen = false;

    void record_simplex(const ProbabilityField& field);
    void record_variance(double min_value);
    void merge(const Diagnostics& other);
};

}  // namespace dirmix

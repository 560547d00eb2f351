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
#include <cstdint>
#include <vector>

#include "dirmix/types.hpp"

namespace dirmix {

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit Mersenne
/// twister draw; identical on every platform for a given seed.
class SeededUniform {
public:
    explicit SeededUniform(std::uint64_t seed);
    double next();
    std::size_t index(std::size_t bound);

private:
    std::uint64_t state_[312];
    std::size_t pos_;
    std::uint64_t draw();
};

struct KMeansResult {
    RowMatrix centers;
    std::vector<std::size_t> labels;
    std::size_t iterations = 0;
};

/// Lloyd iterations (Euclidean) from k-means++ seeding. Stops when labels stop
/// changing or after `max_iter` sweeps. An emptied cluster is moved to the
/// sample farthest from its current center.
KMeansResult kmeans(const RowMatrix& data, std::size_t clusters, std::uint64_t seed,
                    std::size_t max_iter = 50);

}  // namespace dirmix

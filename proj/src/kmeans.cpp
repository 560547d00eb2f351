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

#include "dirmix/kmeans.hpp"

#include <limits>
#include <string>

#include "dirmix/error.hpp"

namespace dirmix {

// MT19937-64 (Matsumoto & Nishimura), spelled out so the stream does not
// depend on the standard library's distribution implementations.
SeededUniform::SeededUniform(std::uint64_t seed) : pos_(312) {
    state_[0] = seed;
    for (std::size_t i = 1; i < 312; ++i) {
        state_[i] = 6364136223846793005ULL * (state_[i - 1] ^ (state_[i - 1] >> 62)) + i;
    }
}

std::uint64_t SeededUniform::draw() {
    constexpr std::uint64_t upper = 0xFFFFFFFF80000000ULL;
    constexpr std::uint64_t lower = 0x7FFFFFFFULL;
    if (pos_ >= 312) {
        for (std::size_t i = 0; i < 312; ++i) {
            const std::uint64_t x = (state_[i] & upper) | (state_[(i + 1) % 312] & lower);
            std::uint64_t xa = x >> 1;
            if (x & 1ULL) xa ^= 0xB5026F5AA96619E9ULL;
            state_[i] = state_[(i + 156) % 312] ^ xa;
        }
        pos_ = 0;
    }
    std::uint64_t y = state_[pos_++];
    y ^= (y >> 29) & 0x5555555555555555ULL;
    y ^= (y << 17) & 0x71D67FFFEDA60000ULL;
    y ^= (y << 37) & 0xFFF7EEE000000000ULL;
    y ^= y >> 43;
    return y;
}

double SeededUniform::next() { return static_cast<double>(draw() >> 11) * 0x1.0p-53; }

std::size_t SeededUniform::index(std::size_t bound) {
    return std::min(bound - 1, static_cast<std::size_t>(next() * static_cast<double>(bound)));
}

namespace {

double squared_distance(const RowMatrix& a, Eigen::Index i, const RowMatrix& b, Eigen::Index j) {
    return (a.row(i) - b.row(j)).squaredNorm();
}

}  // namespace

KMeansResult kmeans(const RowMatrix& data, std::size_t clusters, std::uint64_t seed,
                    std::size_t max_iter) {
    const auto n = static_cast<std::size_t>(data.rows());
    if (clusters == 0 || n < clusters) {
        throw Error(Errc::invalid_argument, "k-means needs at least " + std::to_string(clusters) +
                                                " samples, got " + std::to_string(n));
    }
    SeededUniform rng(seed);
    KMeansResult out;
    out.centers.resize(static_cast<Eigen::Index>(clusters), data.cols());

    // k-means++ seeding.
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    out.centers.row(0) = data.row(static_cast<Eigen::Index>(rng.index(n)));
    for (std::size_t c = 1; c < clusters; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(data, static_cast<Eigen::Index>(i), out.centers,
                                                               static_cast<Eigen::Index>(c - 1)));
            total += nearest[i];
        }
        std::size_t pick = rng.index(n);
        if (total > 0.0) {
            const double target = rng.next() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += nearest[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        }
        out.centers.row(static_cast<Eigen::Index>(c)) = data.row(static_cast<Eigen::Index>(pick));
    }

    out.labels.assign(n, clusters);
    std::vector<double> best(n);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t arg = 0;
            double dist = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < clusters; ++c) {
                const double d = squared_distance(data, static_cast<Eigen::Index>(i), out.centers,
                                                  static_cast<Eigen::Index>(c));
                if (d < dist) {
                    dist = d;
                    arg = c;
                }
            }
            best[i] = dist;
            if (out.labels[i] != arg) {
                out.labels[i] = arg;
                changed = true;
            }
        }
        out.iterations = iter + 1;
        if (!changed && iter > 0) break;

        RowMatrix sums = RowMatrix::Zero(static_cast<Eigen::Index>(clusters), data.cols());
        std::vector<std::size_t> counts(clusters, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(static_cast<Eigen::Index>(out.labels[i])) += data.row(static_cast<Eigen::Index>(i));
            ++counts[out.labels[i]];
        }
        for (std::size_t c = 0; c < clusters; ++c) {
            if (counts[c] > 0) {
                out.centers.row(static_cast<Eigen::Index>(c)) =
                    sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
                continue;
            }
            std::size_t far = 0;
            for (std::size_t i = 1; i < n; ++i) {
                if (best[i] > best[far]) far = i;
            }
            out.centers.row(static_cast<Eigen::Index>(c)) = data.row(static_cast<Eigen::Index>(far));
            best[far] = 0.0;
        }
    }
    return out;
}

}  // namespace dirmix

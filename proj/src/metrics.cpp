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

#include "dirmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "dirmix/error.hpp"

namespace dirmix {

namespace {

using wide = __int128;

wide pairs(std::uint64_t n) { return static_cast<wide>(n) * static_cast<wide>(n == 0 ? 0 : n - 1) / 2; }

void check_same_shape(const LabelMap& a, const LabelMap& b) {
    if (a.height != b.height || a.width != b.width || a.labels.size() != b.labels.size()) {
        throw Error(Errc::dimension_mismatch, std::to_string(a.height) + "x" + std::to_string(a.width) +
                                                  " vs " + std::to_string(b.height) + "x" +
                                                  std::to_string(b.width));
    }
}

std::size_t label_span(const LabelMap& m) {
    std::uint32_t top = 0;
    for (auto v : m.labels) top = std::max(top, v);
    return m.labels.empty() ? 0 : std::size_t{top} + 1;
}

struct Point {
    std::int64_t row;
    std::int64_t col;
};

std::vector<Point> boundary_points(const LabelMap& map) {
    const auto mask = boundary_pixels(map);
    std::vector<Point> out;
    for (std::size_t n = 0; n < mask.size(); ++n) {
        if (mask[n]) out.push_back({static_cast<std::int64_t>(n / map.width), static_cast<std::int64_t>(n % map.width)});
    }
    return out;
}

// Greedy one-to-one matching, closest pairs first (ties by pred then ref
// index). Returns the matched flags for both sides.
std::pair<std::vector<std::uint8_t>, std::size_t> greedy_match(const std::vector<Point>& pred,
                                                               const std::vector<Point>& ref, double radius) {
    std::vector<std::uint8_t> pred_matched(pred.size(), 0);
    if (pred.empty() || ref.empty() || radius < 0.0) return {pred_matched, 0};
    const double r2 = radius * radius;
    const auto reach = static_cast<std::int64_t>(std::floor(radius));

    // Bucket reference points by row to limit the candidate search.
    std::int64_t max_row = 0;
    for (const auto& p : ref) max_row = std::max(max_row, p.row);
    for (const auto& p : pred) max_row = std::max(max_row, p.row);
    std::vector<std::vector<std::uint32_t>> by_row(static_cast<std::size_t>(max_row) + 1);
    for (std::size_t j = 0; j < ref.size(); ++j) by_row[static_cast<std::size_t>(ref[j].row)].push_back(static_cast<std::uint32_t>(j));

    std::vector<std::tuple<std::int64_t, std::uint32_t, std::uint32_t>> candidates;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto lo = std::max<std::int64_t>(0, pred[i].row - reach);
        const auto hi = std::min<std::int64_t>(max_row, pred[i].row + reach);
        for (auto row = lo; row <= hi; ++row) {
            for (auto j : by_row[static_cast<std::size_t>(row)]) {
                const auto dr = pred[i].row - ref[j].row;
                const auto dc = pred[i].col - ref[j].col;
                const auto dist2 = dr * dr + dc * dc;
                if (static_cast<double>(dist2) <= r2) candidates.emplace_back(dist2, static_cast<std::uint32_t>(i), j);
            }
        }
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<std::uint8_t> ref_matched(ref.size(), 0);
    std::size_t matched = 0;
    for (const auto& [dist2, i, j] : candidates) {
        if (pred_matched[i] || ref_matched[j]) continue;
        pred_matched[i] = 1;
        ref_matched[j] = 1;
        ++matched;
    }
    return {pred_matched, matched};
}

}  // namespace

ContingencyTable contingency(const LabelMap& a, const LabelMap& b) {
    check_same_shape(a, b);
    ContingencyTable t;
    t.rows = label_span(a);
    t.cols = label_span(b);
    t.counts.assign(t.rows * t.cols, 0);
    t.row_sums.assign(t.rows, 0);
    t.col_sums.assign(t.cols, 0);
    for (std::size_t n = 0; n < a.labels.size(); ++n) {
        ++t.counts[std::size_t{a.labels[n]} * t.cols + b.labels[n]];
        ++t.row_sums[a.labels[n]];
        ++t.col_sums[b.labels[n]];
    }
    t.total = a.labels.size();
    return t;
}

double adjusted_rand_index(const LabelMap& a, const LabelMap& b) {
    const ContingencyTable t = contingency(a, b);
    wide index = 0;
    for (auto c : t.counts) index += pairs(c);
    wide sum_a = 0;
    for (auto c : t.row_sums) sum_a += pairs(c);
    wide sum_b = 0;
    for (auto c : t.col_sums) sum_b += pairs(c);
    const wide all = pairs(t.total);

    // Multiply through by 2·C(N,2) to stay in integers.
    const wide prod = sum_a * sum_b;
    const wide numer = 2 * index * all - 2 * prod;
    const wide denom = (sum_a + sum_b) * all - 2 * prod;
    // Zero only when both partitions are all-one-cluster or all-singletons.
    if (denom == 0) return 1.0;
    return static_cast<double>(static_cast<long double>(numer) / static_cast<long double>(denom));
}

std::vector<std::uint8_t> boundary_pixels(const LabelMap& map) {
    std::vector<std::uint8_t> mask(map.labels.size(), 0);
    const std::size_t w = map.width;
    for (std::size_t r = 0; r < map.height; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t n = r * w + c;
            const bool right = c + 1 < w && map.labels[n] != map.labels[n + 1];
            const bool below = r + 1 < map.height && map.labels[n] != map.labels[n + w];
            mask[n] = right || below ? 1 : 0;
        }
    }
    return mask;
}

double default_match_radius(std::uint32_t height, std::uint32_t width) {
    return 0.0075 * std::hypot(static_cast<double>(height), static_cast<double>(width));
}

BoundaryScore boundary_score(const LabelMap& pred, std::span<const LabelMap> refs, double match_radius) {
    if (refs.empty()) throw Error(Errc::invalid_argument, "no reference maps");
    for (const auto& ref : refs) check_same_shape(pred, ref);
    const auto pred_points = boundary_points(pred);

    std::vector<std::uint8_t> any_match(pred_points.size(), 0);
    double recall_sum = 0.0;
    for (const auto& ref : refs) {
        const auto ref_points = boundary_points(ref);
        const auto [flags, matched] = greedy_match(pred_points, ref_points, match_radius);
        for (std::size_t i = 0; i < flags.size(); ++i) any_match[i] |= flags[i];
        recall_sum += ref_points.empty() ? 1.0
                                         : static_cast<double>(matched) / static_cast<double>(ref_points.size());
    }
    BoundaryScore s;
    if (pred_points.empty()) {
        s.precision = 1.0;
    } else {
        const auto hits = std::count(any_match.begin(), any_match.end(), std::uint8_t{1});
        s.precision = static_cast<double>(hits) / static_cast<double>(pred_points.size());
    }
    s.recall = recall_sum / static_cast<double>(refs.size());
    s.f = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

double boundary_f_score(const LabelMap& pred, std::span<const LabelMap> refs, double match_radius) {
    return boundary_score(pred, refs, match_radius).f;
}

}  // namespace dirmix

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

#include "dirmix/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dirmix/error.hpp"
#include "dirmix/simd/kernels.hpp"

namespace dirmix {

namespace {

void check_rows(const Eigen::MatrixXd& maps, GridShape shape, const char* what) {
    if (static_cast<std::size_t>(maps.rows()) != shape.size()) {
        throw Error(Errc::shape_mismatch, std::string(what) + ": " + std::to_string(maps.rows()) +
                                              " rows for a " + std::to_string(shape.height) + "x" +
                                              std::to_string(shape.width) + " lattice");
    }
}

struct AxisWeights {
    // For each target index: contributing source indices and weights.
    std::vector<std::vector<std::pair<std::size_t, double>>> taps;
};

// Target cell i spans [i·S, (i+1)·S) and source cell j spans [j·D, (j+1)·D)
// in units of 1/D source pixels; the overlap divided by S is the weight.
AxisWeights area_weights(std::size_t src, std::size_t dst) {
    AxisWeights w;
    w.taps.resize(dst);
    for (std::size_t i = 0; i < dst; ++i) {
        const std::size_t lo = i * src;
        const std::size_t hi = (i + 1) * src;
        for (std::size_t j = lo / dst; j < src && j * dst < hi; ++j) {
            const std::size_t a = std::max(lo, j * dst);
            const std::size_t b = std::min(hi, (j + 1) * dst);
            if (b > a) w.taps[i].emplace_back(j, static_cast<double>(b - a) / static_cast<double>(src));
        }
    }
    return w;
}

// v_first + Σ w_j (v_j − v_first): exact on constant inputs.
double pooled(const std::vector<std::pair<std::size_t, double>>& taps, const double* base,
              std::size_t stride) {
    const double first = base[taps.front().first * stride];
    double acc = 0.0;
    for (const auto& [j, w] : taps) acc += w * (base[j * stride] - first);
    return first + acc;
}

}  // namespace

double GaussianKernel::self_overlap() const {
    double s = 0.0;
    for (double g : taps) s += g * g;
    return s * s;
}

GaussianKernel gaussian_kernel(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw Error(Errc::non_positive_sigma, "sigma = " + std::to_string(sigma));
    }
    GaussianKernel k;
    k.sigma = sigma;
    k.radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
    k.taps.resize(2 * k.radius + 1);
    for (std::size_t i = 0; i <= k.radius; ++i) {
        const double x = static_cast<double>(i);
        const double v = std::exp(-x * x / (2.0 * sigma * sigma));
        k.taps[k.radius + i] = v;
        k.taps[k.radius - i] = v;
    }
    // Sum symmetric pairs from the tails inward so g[i] == g[−i] survives normalization.
    double total = k.taps[k.radius];
    for (std::size_t i = k.radius; i >= 1; --i) total += 2.0 * k.taps[k.radius + i];
    for (double& v : k.taps) v /= total;
    return k;
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
    return static_cast<std::size_t>(m);
}

void convolve_plane(std::span<const double> in, std::span<double> out, GridShape shape,
                    std::span<const double> taps) {
    const std::size_t h = shape.height;
    const std::size_t w = shape.width;
    if (in.size() != shape.size() || out.size() != shape.size()) {
        throw Error(Errc::shape_mismatch, "convolve_plane buffer size");
    }
    const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
    const auto& kern = simd::active();

    std::vector<double> tmp(in.begin(), in.end());
    std::vector<double> padded(w + 2 * static_cast<std::size_t>(radius));
    for (std::size_t y = 0; y < h; ++y) {
        const double* row = in.data() + y * w;
        for (std::ptrdiff_t x = -radius; x < static_cast<std::ptrdiff_t>(w) + radius; ++x) {
            padded[static_cast<std::size_t>(x + radius)] = row[reflect_index(x, w)];
        }
        double* dst = tmp.data() + y * w;
        for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
            if (t == 0) continue;
            kern.axpy_diff(w, taps[static_cast<std::size_t>(t + radius)],
                           padded.data() + (radius + t), row, dst);
        }
    }
    std::copy(tmp.begin(), tmp.end(), out.begin());
    for (std::size_t y = 0; y < h; ++y) {
        const double* center = tmp.data() + y * w;
        double* dst = out.data() + y * w;
        for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
            if (t == 0) continue;
            const std::size_t src = reflect_index(static_cast<std::ptrdiff_t>(y) + t, h);
            kern.axpy_diff(w, taps[static_cast<std::size_t>(t + radius)], tmp.data() + src * w,
                           center, dst);
        }
    }
}

Eigen::MatrixXd convolve_field(const Eigen::MatrixXd& field, GridShape shape,
                               std::span<const double> taps) {
    check_rows(field, shape, "convolve_field");
    Eigen::MatrixXd out(field.rows(), field.cols());
    const auto n = shape.size();
    for (Eigen::Index k = 0; k < field.cols(); ++k) {
        convolve_plane({field.col(k).data(), n}, {out.col(k).data(), n}, shape, taps);
    }
    return out;
}

ProbabilityField local_mean(const ProbabilityField& tau, GridShape shape, const GaussianKernel& kernel) {
    return convolve_field(tau, shape, kernel.taps);
}

Eigen::VectorXd local_variance(const ProbabilityField& tau, const ProbabilityField& mean, GridShape shape,
                               const GaussianKernel& kernel, double floor) {
    check_rows(tau, shape, "local_variance");
    check_rows(mean, shape, "local_variance");
    const auto n = shape.size();
    const auto& kern = simd::active();
    Eigen::MatrixXd squared(tau.rows(), tau.cols());
    for (Eigen::Index k = 0; k < tau.cols(); ++k) {
        kern.square(n, tau.col(k).data(), squared.col(k).data());
    }
    const Eigen::MatrixXd smoothed_sq = convolve_field(squared, shape, kernel.taps);
    const double denom = static_cast<double>(tau.cols()) * (1.0 - kernel.self_overlap());

    Eigen::VectorXd out(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        double numer = 0.0;
        for (Eigen::Index k = 0; k < tau.cols(); ++k) {
            numer += smoothed_sq(i, k) - mean(i, k) * mean(i, k);
        }
        out[i] = std::max(numer / denom, floor);
    }
    return out;
}

LocalStats local_stats(const ProbabilityField& tau, GridShape shape, const GaussianKernel& kernel,
                       double floor) {
    LocalStats s;
    s.mean = local_mean(tau, shape, kernel);
    s.variance = local_variance(tau, s.mean, shape, kernel, floor);
    return s;
}

Eigen::MatrixXd resample_nn_up(const Eigen::MatrixXd& maps, GridShape from, GridShape to) {
    check_rows(maps, from, "resample_nn_up");
    if (to.height < from.height || to.width < from.width) {
        throw Error(Errc::shrink_requested, "nearest-neighbor upsampling cannot shrink a lattice");
    }
    std::vector<std::size_t> src_y(to.height), src_x(to.width);
    for (std::size_t y = 0; y < to.height; ++y) src_y[y] = y * from.height / to.height;
    for (std::size_t x = 0; x < to.width; ++x) src_x[x] = x * from.width / to.width;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(to.size()), maps.cols());
    for (Eigen::Index k = 0; k < maps.cols(); ++k) {
        const double* src = maps.col(k).data();
        double* dst = out.col(k).data();
        for (std::size_t y = 0; y < to.height; ++y) {
            for (std::size_t x = 0; x < to.width; ++x) {
                dst[y * to.width + x] = src[src_y[y] * from.width + src_x[x]];
            }
        }
    }
    return out;
}

Eigen::MatrixXd resample_avg_down(const Eigen::MatrixXd& maps, GridShape from, GridShape to) {
    check_rows(maps, from, "resample_avg_down");
    if (to.height > from.height || to.width > from.width) {
        throw Error(Errc::grow_requested, "average pooling cannot grow a lattice");
    }
    if (to.height == 0 || to.width == 0) throw Error(Errc::invalid_argument, "empty target lattice");
    const AxisWeights wx = area_weights(from.width, to.width);
    const AxisWeights wy = area_weights(from.height, to.height);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(to.size()), maps.cols());
    std::vector<double> rows(from.height * to.width);
    for (Eigen::Index k = 0; k < maps.cols(); ++k) {
        const double* src = maps.col(k).data();
        for (std::size_t y = 0; y < from.height; ++y) {
            for (std::size_t x = 0; x < to.width; ++x) {
                rows[y * to.width + x] = pooled(wx.taps[x], src + y * from.width, 1);
            }
        }
        double* dst = out.col(k).data();
        for (std::size_t y = 0; y < to.height; ++y) {
            for (std::size_t x = 0; x < to.width; ++x) {
                dst[y * to.width + x] = pooled(wy.taps[y], rows.data() + x, to.width);
            }
        }
    }
    return out;
}

Eigen::MatrixXd resample(const Eigen::MatrixXd& maps, GridShape from, GridShape to) {
    if (from == to) {
        check_rows(maps, from, "resample");
        return maps;
    }
    if (to.height >= from.height && to.width >= from.width) return resample_nn_up(maps, from, to);
    if (to.height <= from.height && to.width <= from.width) return resample_avg_down(maps, from, to);
    throw Error(Errc::shape_mismatch, "lattices are not nested: one axis grows, the other shrinks");
}

}  // namespace dirmix

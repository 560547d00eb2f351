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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dirmix/types.hpp"

namespace dirmix {

inline constexpr double variance_floor = 1e-8;

/// Separable discrete Gaussian: taps exp(−i²/(2σ²)) for |i| ≤ ceil(3σ),
/// normalized to sum 1 per axis.
struct GaussianKernel {
    double sigma = 0.0;
    std::size_t radius = 0;
    std::vector<double> taps;  // 2·radius + 1 entries, taps[radius] is the center

    /// 2-d weight at the origin, g₀².
    double center_weight() const { return taps[radius] * taps[radius]; }
    /// G∗G(0) = Σ over the 2-d taps of w², which factors as (Σ g_i²)².
    double self_overlap() const;
};

/// Throws NonPositiveSigma for σ ≤ 0 or non-finite σ.
GaussianKernel gaussian_kernel(double sigma);

/// Half-sample symmetric reflection (…c b a | a b c…) of any integer index
/// into [0, n).
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept;

/// 2-d separable convolution of one plane with the same 1-d taps on both axes
/// and reflect padding. Evaluated as c + Σ g_t (v_t − c) around the center
/// value c, which keeps constant planes exactly constant.
void convolve_plane(std::span<const double> in, std::span<double> out, GridShape shape,
                    std::span<const double> taps);

/// Convolves every column (component plane) of `field`.
Eigen::MatrixXd convolve_field(const Eigen::MatrixXd& field, GridShape shape,
                               std::span<const double> taps);

/// m_k = G ∗ τ_k for every component.
ProbabilityField local_mean(const ProbabilityField& tau, GridShape shape, const GaussianKernel& kernel);

/// s²_n = max(Σ_k [(G∗τ_k²)_n − m_{n,k}²] / (K·(1 − G∗G(0))), floor).
Eigen::VectorXd local_variance(const ProbabilityField& tau, const ProbabilityField& mean, GridShape shape,
                               const GaussianKernel& kernel, double floor = variance_floor);

struct LocalStats {
    ProbabilityField mean;
    Eigen::VectorXd variance;
};

LocalStats local_stats(const ProbabilityField& tau, GridShape shape, const GaussianKernel& kernel,
                       double floor = variance_floor);

/// Nearest-neighbor upsampling: target index i reads source floor(i·src/dst)
/// on each axis. Throws ShrinkRequested if either axis would shrink.
Eigen::MatrixXd resample_nn_up(const Eigen::MatrixXd& maps, GridShape from, GridShape to);

/// Area-weighted average pooling (plain block means for integer ratios).
/// Throws GrowRequested if either axis would grow.
Eigen::MatrixXd resample_avg_down(const Eigen::MatrixXd& maps, GridShape from, GridShape to);

/// Picks nn-up or avg-down by comparing the shapes; identity for equal shapes.
/// Throws ShapeMismatch when one axis grows while the other shrinks.
Eigen::MatrixXd resample(const Eigen::MatrixXd& maps, GridShape from, GridShape to);

}  // namespace dirmix

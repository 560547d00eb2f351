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
#include <vector>

#include "dirmix/feature_io.hpp"
#include "dirmix/multilayer.hpp"
#include "dirmix/types.hpp"

namespace dirmix {

inline constexpr double default_variance_threshold = 0.90;

struct PcaModel {
    Eigen::VectorXd mean;
    // d×r, orthonormal columns ordered by decreasing eigenvalue.
    Eigen::MatrixXd projection;
    std::size_t retained = 0;
    // Eigenvalue / total variance for every available direction.
    std::vector<double> explained;

    std::size_t input_dimension() const { return static_cast<std::size_t>(mean.size()); }
    double retained_ratio() const;
};

/// Eigendecomposition of the 1/N covariance (or of the Gram matrix when there
/// are no more pixels than channels). Keeps the smallest r whose cumulative
/// ratio reaches `threshold`; each direction's largest-magnitude entry is made
/// positive. All-constant features give r = 1 along the first axis.
PcaModel pca_fit(const RowMatrix& data, double threshold = default_variance_threshold);
PcaModel pca_fit(const LayerGrid& layer, double threshold = default_variance_threshold);

/// (x − mean)ᵀ·P per row. Throws ChannelMismatch.
RowMatrix pca_project(const PcaModel& model, const RowMatrix& data);
LayerGrid pca_transform(const PcaModel& model, const LayerGrid& layer);

/// Appends layer 1's channels, resampled to each deeper layer's lattice.
FeatureStack augment_with_layer1(const FeatureStack& stack);

struct PreprocessConfig {
    bool augment = true;
    double variance_threshold = default_variance_threshold;
};

/// augment → per-layer PCA, kept in double precision for the fit.
std::vector<LayerInput> preprocess(const FeatureStack& stack, const PreprocessConfig& config,
                                   std::vector<PcaModel>* models = nullptr);

}  // namespace dirmix

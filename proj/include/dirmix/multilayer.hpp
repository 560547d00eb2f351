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
#include <span>
#include <string>
#include <vector>

#include "dirmix/densities.hpp"
#include "dirmix/feature_io.hpp"
#include "dirmix/spatial.hpp"
#include "dirmix/types.hpp"

namespace dirmix {

/// How mixing fields are coupled across layers:
///   independent_layers (a): each layer smooths its own posteriors,
///   shared_map (b): one field on the finest lattice drives every layer,
///   chain_coupled (c): each layer pools evidence from its two neighbors.
enum class ModelVariant { independent_layers, shared_map, chain_coupled };

std::string to_string(ModelVariant variant);
/// Accepts "a"/"b"/"c" or the enumerator names.
ModelVariant model_variant_from_string(const std::string& name);

/// Per-layer kernel widths used for 16-layer VGG-19 stacks; layers past the
/// list reuse its last value.
std::vector<double> default_sigma_schedule(ModelVariant variant, std::size_t layers);

// ---- mixing updates -------------------------------------------------------
// The model updates pass through normalize_weights, so every entry is at
// least the 1e-12 weight floor, as with the generic rule engine.


/// p = (s²·τ + m) / (s² + 1), elementwise with s² broadcast over components.
ProbabilityField update_model_a(const ProbabilityField& tau, const ProbabilityField& mean,
                                const Eigen::VectorXd& variance);

/// Σ_h m_h/s²_h normalized by Σ_h 1/s²_h; every term on the same lattice.
ProbabilityField precision_weighted_mean(std::span<const LocalStats> terms);

/// Shared field from all layers' statistics already resampled to layer 1.
ProbabilityField update_model_b(std::span<const LocalStats> stats_on_finest);

/// Chain update for one layer; absent neighbors (nullptr) are dropped.
ProbabilityField update_model_c(const LocalStats* previous, const LocalStats& current,
                                const LocalStats* next);

/// Generic-rule weights for the independent-layer model: τ + m/s².
ProbabilityField independent_layer_weights(const ProbabilityField& tau, const LocalStats& stats);

/// Generic-rule weights for the coupled models: Σ over terms of m/s².
ProbabilityField coupled_weights(std::span<const LocalStats> terms);

// ---- fitting ----------------------------------------------------------------

struct LayerInput {
    GridShape shape;
    RowMatrix features;
};

std::vector<LayerInput> layer_inputs(const FeatureStack& stack);

struct MultilayerConfig {
    ModelVariant variant = ModelVariant::chain_coupled;
    std::size_t components = 2;
    std::size_t n_iter = 20;
    // One σ per layer; empty selects default_sigma_schedule.
    std::vector<double> sigmas;
    std::uint64_t seed = 0;
    double variance_floor = dirmix::variance_floor;
};

struct LayerState {
    GridShape shape;
    ComponentParams params;
    ProbabilityField mixing;
    ProbabilityField responsibilities;
    // Per-layer objective after every sweep.
    std::vector<double> trace;
    // Per-layer observed-data log-likelihood after every sweep.
    std::vector<double> likelihood_trace;
    double initial_likelihood = 0.0;
};

struct MultilayerState {
    ModelVariant variant = ModelVariant::chain_coupled;
    std::size_t components = 0;
    std::vector<LayerState> layers;
    std::vector<GaussianKernel> kernels;
    // Shared-map model only: the single field on layer 1's lattice.
    ProbabilityField shared_mixing;
    // Sum of the per-layer objectives after every sweep.
    std::vector<double> total_trace;
    double initial_total = 0.0;
    std::vector<double> initial_layer_values;
    // Sum over layers of the observed-data log-likelihoods.
    std::vector<double> likelihood_total;
    double initial_likelihood_total = 0.0;
    Diagnostics diagnostics;
};

/// Alternates E-steps on every layer with the variant's mixing update plus the
/// density M-step on every layer, for config.n_iter sweeps, after a K-means
/// start on layer 1 whose posteriors seed the other layers.
MultilayerState fit_multilayer(std::span<const LayerInput> layers, const ComponentDensity& density,
                               const MultilayerConfig& config);

MultilayerState fit_multilayer(const FeatureStack& stack, const ComponentDensity& density,
                               const MultilayerConfig& config);

/// Argmax of the layer's mixing field, ties toward the smaller index. Under the
/// shared-map model the layer-1 label map is pooled by majority vote onto the
/// requested layer, so every layer is a resampling of one label map.
LabelMap extract_labels(const MultilayerState& state, std::size_t layer);

/// Majority-vote pooling of a label map onto a coarser (or equal) lattice,
/// i.e. argmax of the average-pooled one-hot encoding.
LabelMap pool_labels(const LabelMap& labels, GridShape to);

}  // namespace dirmix

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

#include "dirmix/densities.hpp"
#include "dirmix/types.hpp"
#include "dirmix/update_rule.hpp"

namespace dirmix {

/// Raw weights are floored here before row normalization.
inline constexpr double weight_floor = 1e-12;

/// Row n becomes f_n / Σ_k f_{n,k} after flooring every entry at 1e-12.
/// Throws ZeroRowWeight when a row is negative, non-finite, or sums to zero.
ProbabilityField normalize_weights(ProbabilityField weights);

/// Next mixing field from the rule applied to the current responsibilities.
ProbabilityField apply_update_rule(const UpdateRule& rule, const ProbabilityField& tau);

/// τ_{n,k} ∝ p_{n,k}·𝒫_k(x_n), normalized in the log domain (log-sum-exp).
/// Throws DegenerateDensity when a log-density is NaN. The observed-data
/// log-likelihood Σ_n ln Σ_k p_{n,k}·𝒫_k(x_n) comes out of the same pass.
ProbabilityField responsibilities(const Eigen::MatrixXd& log_densities, const ProbabilityField& mixing,
                                  double* log_likelihood = nullptr);

double log_likelihood(const Eigen::MatrixXd& log_densities, const ProbabilityField& mixing);

ProbabilityField e_step(const ComponentDensity& density, const ComponentParams& params,
                        const ProbabilityField& mixing, const RowMatrix& data);

/// Σ_n Σ_k f_{n,k}(τ)·ln p_{n,k} + Σ_n Σ_k τ_{n,k}·ln 𝒫_k(x_n), with τ the
/// E-step at the given parameters and f the rule's floored weights.
double log_posterior(const ComponentDensity& density, const ComponentParams& params,
                     const ProbabilityField& mixing, const UpdateRule& rule, const RowMatrix& data);

/// Same objective from already-evaluated pieces.
double log_posterior_terms(const ProbabilityField& weights, const ProbabilityField& mixing,
                           const ProbabilityField& tau, const Eigen::MatrixXd& log_densities);

struct EMConfig {
    std::size_t max_iter = 100;
    // |ΔL| / |L| below this stops the loop; 0 runs exactly max_iter sweeps.
    double rel_tol = 1e-6;
    std::uint64_t rng_seed = 0;
};

struct EMInit {
    ComponentParams params;
    ProbabilityField mixing;
};

/// K-means++/Lloyd (50 sweeps) on the data, component parameters from the hard
/// assignment, uniform mixing.
EMInit initialize(const ComponentDensity& density, const RowMatrix& data, std::size_t components,
                  std::uint64_t seed, Diagnostics& diagnostics);

struct FitResult {
    ProbabilityField mixing;
    ComponentParams params;
    ProbabilityField responsibilities;
    // log_posterior after each sweep; trace.size() == iterations.
    std::vector<double> trace;
    double initial_log_posterior = 0.0;
    // Observed-data log-likelihood after each sweep, same length as trace.
    std::vector<double> likelihood_trace;
    double initial_log_likelihood = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    Diagnostics diagnostics;
};

FitResult run_em(const ComponentDensity& density, const RowMatrix& data, std::size_t components,
                 const UpdateRule& rule, const EMConfig& config);

/// Runs from explicit starting parameters instead of the K-means start.
FitResult run_em(const ComponentDensity& density, const RowMatrix& data, const UpdateRule& rule,
                 const EMConfig& config, EMInit start);

/// Max over rows of |Σ_k p_{n,k} − 1|, or +inf if any entry is negative or not finite.
double simplex_error(const ProbabilityField& field);

/// Row-wise argmax with ties toward the smaller index.
std::vector<std::uint32_t> argmax_rows(const ProbabilityField& field);

}  // namespace dirmix

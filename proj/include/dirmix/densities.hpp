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
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dirmix/types.hpp"

namespace dirmix {

inline constexpr double dof_min = 0.5;
inline constexpr double dof_max = 1000.0;
inline constexpr double dof_initial = 10.0;
inline constexpr double relative_ridge = 1e-6;
// Used only when a component's scatter has zero trace (every member identical).
inline constexpr double absolute_ridge = 1e-9;
inline constexpr double empty_component_weight = 1e-8;

struct GaussianParams {
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covariances;

    std::size_t size() const noexcept { return means.size(); }
};

struct StudentParams {
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> scales;
    std::vector<double> dof;

    std::size_t size() const noexcept { return means.size(); }
};

using ComponentParams = std::variant<GaussianParams, StudentParams>;

std::size_t component_count(const ComponentParams& params);
std::size_t feature_dimension(const ComponentParams& params);

/// Relative ridge: Σ + 1e-6·trace(Σ)/d·I.
Eigen::MatrixXd add_ridge(Eigen::MatrixXd scatter);

double gaussian_logpdf(const GaussianParams& params, std::size_t k, const Eigen::VectorXd& x);
double student_logpdf(const StudentParams& params, std::size_t k, const Eigen::VectorXd& x);

/// N×K matrices of per-component log-densities via one Cholesky per component.
Eigen::MatrixXd gaussian_log_densities(const GaussianParams& params, const RowMatrix& data);
Eigen::MatrixXd student_log_densities(const StudentParams& params, const RowMatrix& data);

/// Weighted MLE: responsibility-weighted means and biased covariances (+ ridge).
/// Throws EmptyComponent when a column of `tau` sums below 1e-8.
GaussianParams gaussian_m_step(const RowMatrix& data, const ProbabilityField& tau);

/// Solves the one-dimensional degrees-of-freedom equation on [dof_min, dof_max]
/// by bisection. `mean_log_u_minus_u` is Σ τ(ln u − u) / Σ τ. When the bracket
/// holds no sign change the endpoint maximizing the objective is returned and
/// `bracket_failed` is set.
double solve_dof(double mean_log_u_minus_u, double prev_dof, double dimension, bool& bracket_failed);

/// One EM step for Student-t components with latent Gamma scale weights computed
/// at `prev`. Bracket failures are counted in `diagnostics` when given.
StudentParams student_m_step(const RowMatrix& data, const ProbabilityField& tau,
                             const StudentParams& prev, bool estimate_dof,
                             Diagnostics* diagnostics = nullptr, bool shared_dof = false);

enum class DensityFamily { gaussian, student };

std::string to_string(DensityFamily family);
DensityFamily density_family_from_string(const std::string& name);

struct DensityConfig {
    DensityFamily family = DensityFamily::gaussian;
    bool estimate_dof = true;
    // Initial value, and the value kept when estimate_dof is false.
    double dof = dof_initial;
    bool shared_dof = false;
};

/// Pluggable component family used by the EM engines. Wraps the free M-steps
/// with the empty-component policy: a component whose total responsibility
/// falls below 1e-8 is re-seeded at the sample with the lowest
/// max-responsibility, with the data scatter as its covariance.
class ComponentDensity {
public:
    explicit ComponentDensity(DensityConfig config = {}) : config_(config) {}

    const DensityConfig& config() const noexcept { return config_; }
    DensityFamily family() const noexcept { return config_.family; }

    Eigen::MatrixXd log_densities(const ComponentParams& params, const RowMatrix& data) const;

    ComponentParams m_step(const RowMatrix& data, const ProbabilityField& tau,
                           const ComponentParams& prev, Diagnostics& diagnostics) const;

    /// Parameters fitted to soft/hard weights without a previous estimate
    /// (Gaussian moments; Student-t starts at the configured ν).
    ComponentParams initial(const RowMatrix& data, const ProbabilityField& tau,
                            Diagnostics& diagnostics) const;

private:
    DensityConfig config_;
};

}  // namespace dirmix

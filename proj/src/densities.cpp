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

#include "dirmix/densities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>

#include "dirmix/error.hpp"
#include "dirmix/simd/kernels.hpp"

namespace dirmix {

namespace {

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd scatter;
};

// Σ_n w_n x_n / Σ_n w_n and Σ_n w_n (x_n − μ)(x_n − μ)ᵀ / scatter_norm, summed in
// ascending sample order.
Moments weighted_moments(const RowMatrix& data, const double* weights, double scatter_norm) {
    const auto n_samples = static_cast<std::size_t>(data.rows());
    const auto d = static_cast<std::size_t>(data.cols());
    const auto& kern = simd::active();

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    double total = 0.0;
    for (std::size_t n = 0; n < n_samples; ++n) {
        total += weights[n];
        kern.axpy(d, weights[n], data.row(static_cast<Eigen::Index>(n)).data(), sum.data());
    }
    Moments out;
    out.mean = sum / total;

    out.scatter = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    Eigen::VectorXd diff(static_cast<Eigen::Index>(d));
    for (std::size_t n = 0; n < n_samples; ++n) {
        if (weights[n] == 0.0) continue;
        diff = data.row(static_cast<Eigen::Index>(n)).transpose() - out.mean;
        for (std::size_t i = 0; i < d; ++i) {
            kern.axpy(d, weights[n] * diff[static_cast<Eigen::Index>(i)], diff.data(),
                      out.scatter.col(static_cast<Eigen::Index>(i)).data());
        }
    }
    out.scatter /= scatter_norm;
    return out;
}

Eigen::LLT<Eigen::MatrixXd> checked_cholesky(const Eigen::MatrixXd& m, std::size_t k) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        throw Error(Errc::not_positive_definite, "component " + std::to_string(k));
    }
    return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    const auto& l = llt.matrixLLT();
    double s = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

// Squared Mahalanobis distance of every sample to `mean` under the factor `llt`.
Eigen::VectorXd mahalanobis(const RowMatrix& data, const Eigen::VectorXd& mean,
                            const Eigen::LLT<Eigen::MatrixXd>& llt) {
    Eigen::MatrixXd centered = (data.rowwise() - mean.transpose()).transpose();
    llt.matrixL().solveInPlace(centered);
    return centered.colwise().squaredNorm().transpose();
}

double column_weight(const ProbabilityField& tau, Eigen::Index k) {
    double total = 0.0;
    for (Eigen::Index n = 0; n < tau.rows(); ++n) total += tau(n, k);
    return total;
}

void check_shapes(const RowMatrix& data, const ProbabilityField& tau) {
    if (data.rows() != tau.rows()) {
        throw Error(Errc::shape_mismatch, "data has " + std::to_string(data.rows()) +
                                              " samples, responsibilities " + std::to_string(tau.rows()));
    }
}

Eigen::MatrixXd data_scatter(const RowMatrix& data) {
    std::vector<double> ones(static_cast<std::size_t>(data.rows()), 1.0);
    return add_ridge(weighted_moments(data, ones.data(), static_cast<double>(data.rows())).scatter);
}

// Samples ordered by ascending max-responsibility (ties by index).
std::vector<std::size_t> least_claimed_samples(const ProbabilityField& tau) {
    std::vector<std::size_t> order(static_cast<std::size_t>(tau.rows()));
    std::iota(order.begin(), order.end(), 0);
    Eigen::VectorXd best = tau.rowwise().maxCoeff();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return best[static_cast<Eigen::Index>(a)] < best[static_cast<Eigen::Index>(b)];
    });
    return order;
}

double digamma(double x) { return boost::math::digamma(x); }

// d/dν of the degrees-of-freedom objective, up to a positive factor.
double dof_score(double nu, double constant) {
    return -digamma(nu / 2.0) + std::log(nu / 2.0) + 1.0 + constant;
}

}  // namespace

std::size_t component_count(const ComponentParams& params) {
    return std::visit([](const auto& p) { return p.size(); }, params);
}

std::size_t feature_dimension(const ComponentParams& params) {
    return std::visit(
        [](const auto& p) -> std::size_t {
            return p.means.empty() ? 0 : static_cast<std::size_t>(p.means.front().size());
        },
        params);
}

Eigen::MatrixXd add_ridge(Eigen::MatrixXd scatter) {
    const double d = static_cast<double>(scatter.rows());
    // Symmetrize first so round-off in the rank-1 accumulation cannot break Cholesky.
    scatter = 0.5 * (scatter + scatter.transpose()).eval();
    double ridge = relative_ridge * scatter.trace() / d;
    if (!(ridge > 0.0)) ridge = absolute_ridge;
    scatter.diagonal().array() += ridge;
    return scatter;
}

double gaussian_logpdf(const GaussianParams& params, std::size_t k, const Eigen::VectorXd& x) {
    const auto llt = checked_cholesky(params.covariances.at(k), k);
    Eigen::VectorXd y = x - params.means.at(k);
    llt.matrixL().solveInPlace(y);
    const double d = static_cast<double>(x.size());
    return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det(llt) + y.squaredNorm());
}

double student_logpdf(const StudentParams& params, std::size_t k, const Eigen::VectorXd& x) {
    const auto llt = checked_cholesky(params.scales.at(k), k);
    Eigen::VectorXd y = x - params.means.at(k);
    llt.matrixL().solveInPlace(y);
    const double d = static_cast<double>(x.size());
    const double nu = params.dof.at(k);
    return std::lgamma((nu + d) / 2.0) - std::lgamma(nu / 2.0) -
           0.5 * d * std::log(nu * std::numbers::pi) - 0.5 * log_det(llt) -
           0.5 * (nu + d) * std::log1p(y.squaredNorm() / nu);
}

Eigen::MatrixXd gaussian_log_densities(const GaussianParams& params, const RowMatrix& data) {
    const double d = static_cast<double>(data.cols());
    Eigen::MatrixXd out(data.rows(), static_cast<Eigen::Index>(params.size()));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto llt = checked_cholesky(params.covariances[k], k);
        const double constant = d * std::log(2.0 * std::numbers::pi) + log_det(llt);
        out.col(static_cast<Eigen::Index>(k)) =
            -0.5 * (mahalanobis(data, params.means[k], llt).array() + constant);
    }
    return out;
}

Eigen::MatrixXd student_log_densities(const StudentParams& params, const RowMatrix& data) {
    const double d = static_cast<double>(data.cols());
    Eigen::MatrixXd out(data.rows(), static_cast<Eigen::Index>(params.size()));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto llt = checked_cholesky(params.scales[k], k);
        const double nu = params.dof[k];
        const double constant = std::lgamma((nu + d) / 2.0) - std::lgamma(nu / 2.0) -
                                0.5 * d * std::log(nu * std::numbers::pi) - 0.5 * log_det(llt);
        const Eigen::VectorXd delta = mahalanobis(data, params.means[k], llt);
        out.col(static_cast<Eigen::Index>(k)) =
            constant - 0.5 * (nu + d) * (delta.array() / nu).log1p();
    }
    return out;
}

GaussianParams gaussian_m_step(const RowMatrix& data, const ProbabilityField& tau) {
    check_shapes(data, tau);
    GaussianParams out;
    for (Eigen::Index k = 0; k < tau.cols(); ++k) {
        const double weight = column_weight(tau, k);
        if (!(weight >= empty_component_weight)) {
            throw Error(Errc::empty_component, "component " + std::to_string(k) +
                                                   " carries total weight " + std::to_string(weight));
        }
        auto moments = weighted_moments(data, tau.col(k).data(), weight);
        out.means.push_back(std::move(moments.mean));
        out.covariances.push_back(add_ridge(std::move(moments.scatter)));
    }
    return out;
}

double solve_dof(double mean_log_u_minus_u, double prev_dof, double dimension, bool& bracket_failed) {
    const double constant = mean_log_u_minus_u + digamma((prev_dof + dimension) / 2.0) -
                            std::log((prev_dof + dimension) / 2.0);
    double lo = dof_min;
    double hi = dof_max;
    const double score_lo = dof_score(lo, constant);
    const double score_hi = dof_score(hi, constant);
    bracket_failed = false;
    // The score decreases in ν, so its sign tells which side the maximizer lies on.
    if (score_lo <= 0.0) {
        bracket_failed = score_lo < 0.0;
        return lo;
    }
    if (score_hi >= 0.0) {
        bracket_failed = score_hi > 0.0;
        return hi;
    }
    for (int step = 0; step < 200 && hi - lo > 1e-6; ++step) {
        const double mid = 0.5 * (lo + hi);
        if (dof_score(mid, constant) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

StudentParams student_m_step(const RowMatrix& data, const ProbabilityField& tau,
                             const StudentParams& prev, bool estimate_dof,
                             Diagnostics* diagnostics, bool shared_dof) {
    check_shapes(data, tau);
    if (prev.size() != static_cast<std::size_t>(tau.cols())) {
        throw Error(Errc::shape_mismatch, "previous parameters have a different component count");
    }
    const double d = static_cast<double>(data.cols());
    const auto n_samples = static_cast<std::size_t>(data.rows());
    StudentParams out;
    out.dof = prev.dof;

    double pooled_stat = 0.0;
    double pooled_weight = 0.0;
    std::vector<double> weights(n_samples);
    for (std::size_t k = 0; k < prev.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const double weight = column_weight(tau, kk);
        if (!(weight >= empty_component_weight)) {
            throw Error(Errc::empty_component, "component " + std::to_string(k) +
                                                   " carries total weight " + std::to_string(weight));
        }
        const auto llt = checked_cholesky(prev.scales[k], k);
        const Eigen::VectorXd delta = mahalanobis(data, prev.means[k], llt);
        const double nu = prev.dof[k];
        double stat = 0.0;
        for (std::size_t n = 0; n < n_samples; ++n) {
            const double u = (nu + d) / (nu + delta[static_cast<Eigen::Index>(n)]);
            const double t = tau(static_cast<Eigen::Index>(n), kk);
            weights[n] = t * u;
            stat += t * (std::log(u) - u);
        }
        auto moments = weighted_moments(data, weights.data(), weight);
        out.means.push_back(std::move(moments.mean));
        out.scales.push_back(add_ridge(std::move(moments.scatter)));

        if (estimate_dof && !shared_dof) {
            bool failed = false;
            out.dof[k] = solve_dof(stat / weight, nu, d, failed);
            if (failed && diagnostics != nullptr) ++diagnostics->dof_bracket_failures;
        }
        pooled_stat += stat;
        pooled_weight += weight;
    }
    if (estimate_dof && shared_dof) {
        bool failed = false;
        const double nu = solve_dof(pooled_stat / pooled_weight, prev.dof.front(), d, failed);
        if (failed && diagnostics != nullptr) ++diagnostics->dof_bracket_failures;
        std::fill(out.dof.begin(), out.dof.end(), nu);
    }
    return out;
}

std::string to_string(DensityFamily family) {
    return family == DensityFamily::gaussian ? "gaussian" : "student";
}

DensityFamily density_family_from_string(const std::string& name) {
    if (name == "gaussian" || name == "gmm") return DensityFamily::gaussian;
    if (name == "student" || name == "smm" || name == "student-t") return DensityFamily::student;
    throw Error(Errc::invalid_config, "unknown density '" + name + "'");
}

Eigen::MatrixXd ComponentDensity::log_densities(const ComponentParams& params,
                                                const RowMatrix& data) const {
    if (feature_dimension(params) != static_cast<std::size_t>(data.cols())) {
        throw Error(Errc::shape_mismatch, "parameter dimension does not match data");
    }
    if (const auto* g = std::get_if<GaussianParams>(&params)) return gaussian_log_densities(*g, data);
    return student_log_densities(std::get<StudentParams>(params), data);
}

ComponentParams ComponentDensity::m_step(const RowMatrix& data, const ProbabilityField& tau,
                                         const ComponentParams& prev,
                                         Diagnostics& diagnostics) const {
    check_shapes(data, tau);
    const auto n_components = static_cast<std::size_t>(tau.cols());
    std::vector<bool> empty(n_components, false);
    bool any_empty = false;
    for (std::size_t k = 0; k < n_components; ++k) {
        empty[k] = !(column_weight(tau, static_cast<Eigen::Index>(k)) >= empty_component_weight);
        any_empty = any_empty || empty[k];
    }

    // Fit the populated components on a responsibility matrix whose empty
    // columns are replaced by a dummy uniform weight, then overwrite them.
    ProbabilityField working;
    const ProbabilityField* fit_tau = &tau;
    if (any_empty) {
        working = tau;
        for (std::size_t k = 0; k < n_components; ++k) {
            if (empty[k]) working.col(static_cast<Eigen::Index>(k)).setConstant(1.0);
        }
        fit_tau = &working;
    }

    ComponentParams next;
    if (config_.family == DensityFamily::gaussian) {
        next = gaussian_m_step(data, *fit_tau);
    } else {
        StudentParams prev_t = std::get<StudentParams>(prev);
        next = student_m_step(data, *fit_tau, prev_t, config_.estimate_dof, &diagnostics,
                              config_.shared_dof);
    }
    if (!any_empty) return next;

    const auto order = least_claimed_samples(tau);
    const Eigen::MatrixXd scatter = data_scatter(data);
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < n_components; ++k) {
        if (!empty[k]) continue;
        const Eigen::VectorXd seed =
            data.row(static_cast<Eigen::Index>(order[cursor++ % order.size()])).transpose();
        std::visit(
            [&](auto& p) {
                p.means[k] = seed;
                if constexpr (std::is_same_v<std::decay_t<decltype(p)>, GaussianParams>) {
                    p.covariances[k] = scatter;
                } else {
                    p.scales[k] = scatter;
                    p.dof[k] = std::get<StudentParams>(prev).dof[k];
                }
            },
            next);
        ++diagnostics.empty_component_resets;
    }
    return next;
}

ComponentParams ComponentDensity::initial(const RowMatrix& data, const ProbabilityField& tau,
                                          Diagnostics& diagnostics) const {
    const ComponentDensity gaussian(DensityConfig{DensityFamily::gaussian});
    GaussianParams placeholder;
    auto g = std::get<GaussianParams>(gaussian.m_step(data, tau, placeholder, diagnostics));
    if (config_.family == DensityFamily::gaussian) return g;
    StudentParams t;
    t.means = std::move(g.means);
    t.scales = std::move(g.covariances);
    t.dof.assign(t.means.size(), config_.dof);
    return t;
}

}  // namespace dirmix

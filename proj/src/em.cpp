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

#include "dirmix/em.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dirmix/error.hpp"
#include "dirmix/kmeans.hpp"

namespace dirmix {

void Diagnostics::record_simplex(const ProbabilityField& field) {
    max_simplex_error = std::max(max_simplex_error, simplex_error(field));
}

void Diagnostics::record_variance(double min_value) {
    min_local_variance = local_variance_seen ? std::min(min_local_variance, min_value) : min_value;
    local_variance_seen = true;
}

void Diagnostics::merge(const Diagnostics& other) {
    empty_component_resets += other.empty_component_resets;
    dof_bracket_failures += other.dof_bracket_failures;
    max_simplex_error = std::max(max_simplex_error, other.max_simplex_error);
    if (other.local_variance_seen) record_variance(other.min_local_variance);
}

double simplex_error(const ProbabilityField& field) {
    double worst = 0.0;
    for (Eigen::Index n = 0; n < field.rows(); ++n) {
        double sum = 0.0;
        for (Eigen::Index k = 0; k < field.cols(); ++k) {
            const double v = field(n, k);
            if (!(v >= 0.0) || !std::isfinite(v)) return std::numeric_limits<double>::infinity();
            sum += v;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

std::vector<std::uint32_t> argmax_rows(const ProbabilityField& field) {
    std::vector<std::uint32_t> labels(static_cast<std::size_t>(field.rows()));
    for (Eigen::Index n = 0; n < field.rows(); ++n) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < field.cols(); ++k) {
            if (field(n, k) > field(n, best)) best = k;
        }
        labels[static_cast<std::size_t>(n)] = static_cast<std::uint32_t>(best);
    }
    return labels;
}

ProbabilityField normalize_weights(ProbabilityField weights) {
    for (Eigen::Index n = 0; n < weights.rows(); ++n) {
        double sum = 0.0;
        for (Eigen::Index k = 0; k < weights.cols(); ++k) {
            double& f = weights(n, k);
            if (!(f >= 0.0) || !std::isfinite(f)) {
                throw Error(Errc::zero_row_weight, "row " + std::to_string(n) + " has weight " +
                                                       std::to_string(f));
            }
            f = std::max(f, weight_floor);
            sum += f;
        }
        if (!(sum > 0.0) || !std::isfinite(sum)) {
            throw Error(Errc::zero_row_weight, "row " + std::to_string(n));
        }
        weights.row(n) /= sum;
    }
    return weights;
}

ProbabilityField apply_update_rule(const UpdateRule& rule, const ProbabilityField& tau) {
    ProbabilityField w = rule.weights(tau);
    if (w.rows() != tau.rows() || w.cols() != tau.cols()) {
        throw Error(Errc::shape_mismatch, "rule '" + rule.name() + "' changed the field shape");
    }
    return normalize_weights(std::move(w));
}

ProbabilityField responsibilities(const Eigen::MatrixXd& log_densities, const ProbabilityField& mixing,
                                  double* log_likelihood) {
    if (log_densities.rows() != mixing.rows() || log_densities.cols() != mixing.cols()) {
        throw Error(Errc::shape_mismatch, "mixing field does not match the log-density matrix");
    }
    ProbabilityField tau(mixing.rows(), mixing.cols());
    const Eigen::Index k_count = mixing.cols();
    std::vector<double> joint(static_cast<std::size_t>(k_count));
    double total = 0.0;
    for (Eigen::Index n = 0; n < mixing.rows(); ++n) {
        double top = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < k_count; ++k) {
            const double ld = log_densities(n, k);
            if (std::isnan(ld)) {
                throw Error(Errc::degenerate_density, "log-density of sample " + std::to_string(n) +
                                                          " under component " + std::to_string(k));
            }
            const double v = std::log(mixing(n, k)) + ld;
            joint[static_cast<std::size_t>(k)] = v;
            top = std::max(top, v);
        }
        if (!std::isfinite(top)) {
            throw Error(Errc::degenerate_density, "sample " + std::to_string(n) + " has no finite joint");
        }
        double sum = 0.0;
        for (Eigen::Index k = 0; k < k_count; ++k) {
            const double e = std::exp(joint[static_cast<std::size_t>(k)] - top);
            tau(n, k) = e;
            sum += e;
        }
        tau.row(n) /= sum;
        total += top + std::log(sum);
    }
    if (log_likelihood != nullptr) *log_likelihood = total;
    return tau;
}

double log_likelihood(const Eigen::MatrixXd& log_densities, const ProbabilityField& mixing) {
    double value = 0.0;
    responsibilities(log_densities, mixing, &value);
    return value;
}

ProbabilityField e_step(const ComponentDensity& density, const ComponentParams& params,
                        const ProbabilityField& mixing, const RowMatrix& data) {
    return responsibilities(density.log_densities(params, data), mixing);
}

double log_posterior_terms(const ProbabilityField& weights, const ProbabilityField& mixing,
                           const ProbabilityField& tau, const Eigen::MatrixXd& log_densities) {
    double prior = 0.0;
    double data_term = 0.0;
    for (Eigen::Index n = 0; n < tau.rows(); ++n) {
        for (Eigen::Index k = 0; k < tau.cols(); ++k) {
            prior += std::max(weights(n, k), weight_floor) * std::log(mixing(n, k));
            if (tau(n, k) > 0.0) data_term += tau(n, k) * log_densities(n, k);
        }
    }
    const double total = prior + data_term;
    if (!std::isfinite(total)) throw Error(Errc::non_finite, "log-posterior is not finite");
    return total;
}

double log_posterior(const ComponentDensity& density, const ComponentParams& params,
                     const ProbabilityField& mixing, const UpdateRule& rule, const RowMatrix& data) {
    const Eigen::MatrixXd log_dens = density.log_densities(params, data);
    const ProbabilityField tau = responsibilities(log_dens, mixing);
    return log_posterior_terms(rule.weights(tau), mixing, tau, log_dens);
}

EMInit initialize(const ComponentDensity& density, const RowMatrix& data, std::size_t components,
                  std::uint64_t seed, Diagnostics& diagnostics) {
    const auto clusters = kmeans(data, components, seed);
    ProbabilityField hard = ProbabilityField::Zero(data.rows(), static_cast<Eigen::Index>(components));
    for (std::size_t n = 0; n < clusters.labels.size(); ++n) {
        hard(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(clusters.labels[n])) = 1.0;
    }
    EMInit init;
    init.params = density.initial(data, hard, diagnostics);
    init.mixing = ProbabilityField::Constant(data.rows(), static_cast<Eigen::Index>(components),
                                             1.0 / static_cast<double>(components));
    return init;
}

FitResult run_em(const ComponentDensity& density, const RowMatrix& data, std::size_t components,
                 const UpdateRule& rule, const EMConfig& config) {
    if (static_cast<std::size_t>(data.rows()) <= components) {
        throw Error(Errc::invalid_argument, "need more samples than components");
    }
    if (!data.allFinite()) throw Error(Errc::non_finite_value, "data contains non-finite values");
    Diagnostics diagnostics;
    EMInit start = initialize(density, data, components, config.rng_seed, diagnostics);
    FitResult result = run_em(density, data, rule, config, std::move(start));
    result.diagnostics.merge(diagnostics);
    return result;
}

FitResult run_em(const ComponentDensity& density, const RowMatrix& data, const UpdateRule& rule,
                 const EMConfig& config, EMInit start) {
    FitResult result;
    result.params = std::move(start.params);
    result.mixing = std::move(start.mixing);

    Eigen::MatrixXd log_dens = density.log_densities(result.params, data);
    ProbabilityField tau = responsibilities(log_dens, result.mixing, &result.initial_log_likelihood);
    result.diagnostics.record_simplex(tau);
    ProbabilityField weights = rule.weights(tau);
    double current = log_posterior_terms(weights, result.mixing, tau, log_dens);
    result.initial_log_posterior = current;

    for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
        // The weights of the trace evaluation are exactly the rule applied to τ.
        ProbabilityField next_mixing = normalize_weights(std::move(weights));
        ComponentParams next_params = density.m_step(data, tau, result.params, result.diagnostics);
        result.mixing = std::move(next_mixing);
        result.params = std::move(next_params);
        result.diagnostics.record_simplex(result.mixing);

        log_dens = density.log_densities(result.params, data);
        double likelihood = 0.0;
        tau = responsibilities(log_dens, result.mixing, &likelihood);
        result.likelihood_trace.push_back(likelihood);
        result.diagnostics.record_simplex(tau);
        weights = rule.weights(tau);
        const double value = log_posterior_terms(weights, result.mixing, tau, log_dens);
        result.trace.push_back(value);
        result.iterations = iter + 1;

        const double change = std::abs(value - current) / std::max(std::abs(value), 1e-300);
        current = value;
        if (config.rel_tol > 0.0 && change < config.rel_tol) {
            result.converged = true;
            break;
        }
    }
    result.responsibilities = std::move(tau);
    return result;
}

}  // namespace dirmix

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

#include "dirmix/multilayer.hpp"

#include <algorithm>
#include <cmath>

#include "dirmix/em.hpp"
#include "dirmix/error.hpp"
#include "dirmix/parallel.hpp"
#include "dirmix/simd/kernels.hpp"

namespace dirmix {

namespace {

constexpr double schedule_ac[] = {4.25, 4.25, 3.25, 3.25, 2.25, 2.25, 2.25, 2.25, 0.75};
constexpr double schedule_b[] = {2.25, 2.25, 1.75, 1.75, 1.25, 1.25, 1.25, 1.25, 0.75};

void check_same_lattice(std::span<const LocalStats> terms) {
    if (terms.empty()) throw Error(Errc::invalid_argument, "no evidence terms");
    const auto rows = terms.front().mean.rows();
    const auto cols = terms.front().mean.cols();
    for (const auto& t : terms) {
        if (t.mean.rows() != rows || t.mean.cols() != cols || t.variance.size() != rows) {
            throw Error(Errc::shape_mismatch, "evidence terms live on different lattices");
        }
    }
}

LocalStats resample_stats(const LocalStats& stats, GridShape from, GridShape to) {
    if (from == to) return stats;
    LocalStats out;
    out.mean = resample(stats.mean, from, to);
    out.variance = resample(Eigen::MatrixXd(stats.variance), from, to).col(0);
    return out;
}


// Per-sweep quantities that depend only on the current parameters.
struct Evaluation {
    std::vector<Eigen::MatrixXd> log_densities;
    std::vector<ProbabilityField> tau;
    std::vector<LocalStats> stats;
    std::vector<double> likelihood;
};

class Fitter {
public:
    Fitter(std::span<const LayerInput> layers, const ComponentDensity& density,
           const MultilayerConfig& config)
        : inputs_(layers), density_(density), config_(config) {}

    MultilayerState run();

private:
    std::size_t layer_count() const { return inputs_.size(); }
    GridShape shape(std::size_t h) const { return inputs_[h].shape; }

    void initialize();
    Evaluation evaluate();
    void update_mixing(const Evaluation& eval);
    void update_params(const Evaluation& eval);
    std::vector<double> layer_objectives(const Evaluation& eval) const;

    std::span<const LayerInput> inputs_;
    const ComponentDensity& density_;
    MultilayerConfig config_;
    MultilayerState state_;
};

void Fitter::initialize() {
    const std::size_t k = config_.components;
    state_.variant = config_.variant;
    state_.components = k;
    state_.layers.resize(layer_count());

    std::vector<double> sigmas = config_.sigmas.empty()
                                     ? default_sigma_schedule(config_.variant, layer_count())
                                     : config_.sigmas;
    if (sigmas.size() < layer_count()) {
        throw Error(Errc::invalid_config, "sigma schedule has " + std::to_string(sigmas.size()) +
                                              " entries for " + std::to_string(layer_count()) + " layers");
    }
    for (std::size_t h = 0; h < layer_count(); ++h) state_.kernels.push_back(gaussian_kernel(sigmas[h]));

    auto& first = state_.layers[0];
    first.shape = shape(0);
    EMInit init = dirmix::initialize(density_, inputs_[0].features, k, config_.seed, state_.diagnostics);
    first.params = std::move(init.params);
    first.mixing = std::move(init.mixing);
    // Layer-1 posteriors seed the other fields; floored so no mixing entry is exactly zero.
    const ProbabilityField tau1 =
        normalize_weights(e_step(density_, first.params, first.mixing, inputs_[0].features));

    if (config_.variant == ModelVariant::shared_map) {
        state_.shared_mixing = tau1;
        first.mixing = tau1;
    }
    std::vector<Diagnostics> diag(layer_count());
    parallel_for(layer_count() - 1, [&](std::size_t i) {
        const std::size_t h = i + 1;
        auto& layer = state_.layers[h];
        layer.shape = shape(h);
        layer.mixing = resample(tau1, shape(0), shape(h));
        layer.params = density_.initial(inputs_[h].features, layer.mixing, diag[h]);
    });
    for (const auto& d : diag) state_.diagnostics.merge(d);
}

Evaluation Fitter::evaluate() {
    Evaluation eval;
    const std::size_t count = layer_count();
    eval.log_densities.resize(count);
    eval.tau.resize(count);
    eval.stats.resize(count);
    eval.likelihood.resize(count);
    parallel_for(count, [&](std::size_t h) {
        const auto& layer = state_.layers[h];
        eval.log_densities[h] = density_.log_densities(layer.params, inputs_[h].features);
        eval.tau[h] = responsibilities(eval.log_densities[h], layer.mixing, &eval.likelihood[h]);
        eval.stats[h] = local_stats(eval.tau[h], shape(h), state_.kernels[h], config_.variance_floor);
    });
    for (std::size_t h = 0; h < count; ++h) {
        state_.diagnostics.record_simplex(eval.tau[h]);
        state_.diagnostics.record_simplex(eval.stats[h].mean);
        state_.diagnostics.record_variance(eval.stats[h].variance.minCoeff());
    }
    return eval;
}

void Fitter::update_mixing(const Evaluation& eval) {
    const std::size_t count = layer_count();
    switch (config_.variant) {
        case ModelVariant::independent_layers:
            parallel_for(count, [&](std::size_t h) {
                state_.layers[h].mixing =
                    update_model_a(eval.tau[h], eval.stats[h].mean, eval.stats[h].variance);
            });
            break;
        case ModelVariant::shared_map: {
            std::vector<LocalStats> lifted(count);
            parallel_for(count, [&](std::size_t h) { lifted[h] = resample_stats(eval.stats[h], shape(h), shape(0)); });
            state_.shared_mixing = update_model_b(lifted);
            parallel_for(count, [&](std::size_t h) {
                state_.layers[h].mixing = resample(state_.shared_mixing, shape(0), shape(h));
            });
            break;
        }
        case ModelVariant::chain_coupled:
            parallel_for(count, [&](std::size_t h) {
                LocalStats prev, next;
                if (h > 0) prev = resample_stats(eval.stats[h - 1], shape(h - 1), shape(h));
                if (h + 1 < count) next = resample_stats(eval.stats[h + 1], shape(h + 1), shape(h));
                state_.layers[h].mixing = update_model_c(h > 0 ? &prev : nullptr, eval.stats[h],
                                                         h + 1 < count ? &next : nullptr);
            });
            break;
    }
    for (const auto& layer : state_.layers) state_.diagnostics.record_simplex(layer.mixing);
}

void Fitter::update_params(const Evaluation& eval) {
    std::vector<Diagnostics> diag(layer_count());
    parallel_for(layer_count(), [&](std::size_t h) {
        auto& layer = state_.layers[h];
        layer.params = density_.m_step(inputs_[h].features, eval.tau[h], layer.params, diag[h]);
    });
    for (const auto& d : diag) state_.diagnostics.merge(d);
}

std::vector<double> Fitter::layer_objectives(const Evaluation& eval) const {
    const std::size_t count = layer_count();
    std::vector<double> values(count, 0.0);
    const ProbabilityField no_prior;
    switch (config_.variant) {
        case ModelVariant::independent_layers:
            for (std::size_t h = 0; h < count; ++h) {
                values[h] = log_posterior_terms(independent_layer_weights(eval.tau[h], eval.stats[h]),
                                                state_.layers[h].mixing, eval.tau[h], eval.log_densities[h]);
            }
            break;
        case ModelVariant::shared_map: {
            // Prior term lives on the shared field (layer 1); deeper layers
            // contribute their data terms only.
            std::vector<LocalStats> lifted(count);
            for (std::size_t h = 0; h < count; ++h) lifted[h] = resample_stats(eval.stats[h], shape(h), shape(0));
            for (std::size_t h = 0; h < count; ++h) {
                const auto& layer = state_.layers[h];
                if (h == 0) {
                    values[h] = log_posterior_terms(coupled_weights(lifted), state_.shared_mixing,
                                                    eval.tau[h], eval.log_densities[h]);
                } else {
                    const ProbabilityField zero = ProbabilityField::Zero(layer.mixing.rows(), layer.mixing.cols());
                    const ProbabilityField ones = ProbabilityField::Ones(layer.mixing.rows(), layer.mixing.cols());
                    // Zero weights are floored to 1e-12 against ln 1 = 0: no prior contribution.
                    values[h] = log_posterior_terms(zero, ones, eval.tau[h], eval.log_densities[h]);
                }
            }
            break;
        }
        case ModelVariant::chain_coupled:
            for (std::size_t h = 0; h < count; ++h) {
                std::vector<LocalStats> terms;
                if (h > 0) terms.push_back(resample_stats(eval.stats[h - 1], shape(h - 1), shape(h)));
                terms.push_back(eval.stats[h]);
                if (h + 1 < count) terms.push_back(resample_stats(eval.stats[h + 1], shape(h + 1), shape(h)));
                values[h] = log_posterior_terms(coupled_weights(terms), state_.layers[h].mixing, eval.tau[h],
                                                eval.log_densities[h]);
            }
            break;
    }
    return values;
}

MultilayerState Fitter::run() {
    if (inputs_.empty()) throw Error(Errc::invalid_argument, "no layers");
    if (config_.components < 2) throw Error(Errc::invalid_config, "need K >= 2");
    if (config_.n_iter < 1) throw Error(Errc::invalid_config, "need n_iter >= 1");
    for (std::size_t h = 0; h < layer_count(); ++h) {
        if (static_cast<std::size_t>(inputs_[h].features.rows()) != shape(h).size()) {
            throw Error(Errc::shape_mismatch, "layer " + std::to_string(h + 1) + " feature rows");
        }
        if (!inputs_[h].features.allFinite()) {
            throw Error(Errc::non_finite_value, "layer " + std::to_string(h + 1));
        }
    }
    if (shape(0).size() <= config_.components) {
        throw Error(Errc::invalid_argument, "layer 1 needs more pixels than components");
    }

    initialize();
    Evaluation eval = evaluate();
    state_.initial_layer_values = layer_objectives(eval);
    for (double v : state_.initial_layer_values) state_.initial_total += v;
    for (std::size_t h = 0; h < layer_count(); ++h) {
        state_.layers[h].initial_likelihood = eval.likelihood[h];
        state_.initial_likelihood_total += eval.likelihood[h];
    }

    for (std::size_t iter = 0; iter < config_.n_iter; ++iter) {
        update_mixing(eval);
        update_params(eval);
        eval = evaluate();
        const auto values = layer_objectives(eval);
        double total = 0.0;
        double likelihood = 0.0;
        for (std::size_t h = 0; h < layer_count(); ++h) {
            state_.layers[h].trace.push_back(values[h]);
            state_.layers[h].likelihood_trace.push_back(eval.likelihood[h]);
            total += values[h];
            likelihood += eval.likelihood[h];
        }
        state_.total_trace.push_back(total);
        state_.likelihood_total.push_back(likelihood);
    }
    for (std::size_t h = 0; h < layer_count(); ++h) state_.layers[h].responsibilities = std::move(eval.tau[h]);
    return std::move(state_);
}

}  // namespace

std::string to_string(ModelVariant variant) {
    switch (variant) {
        case ModelVariant::independent_layers: return "a";
        case ModelVariant::shared_map: return "b";
        case ModelVariant::chain_coupled: return "c";
    }
    return "?";
}

ModelVariant model_variant_from_string(const std::string& name) {
    if (name == "a" || name == "independent_layers") return ModelVariant::independent_layers;
    if (name == "b" || name == "shared_map") return ModelVariant::shared_map;
    if (name == "c" || name == "chain_coupled") return ModelVariant::chain_coupled;
    throw Error(Errc::invalid_config, "unknown model variant '" + name + "'");
}

std::vector<double> default_sigma_schedule(ModelVariant variant, std::size_t layers) {
    const auto& base = variant == ModelVariant::shared_map ? schedule_b : schedule_ac;
    const std::size_t known = std::size(schedule_ac);
    std::vector<double> out(layers);
    for (std::size_t h = 0; h < layers; ++h) out[h] = base[std::min(h, known - 1)];
    return out;
}

ProbabilityField update_model_a(const ProbabilityField& tau, const ProbabilityField& mean,
                                const Eigen::VectorXd& variance) {
    if (tau.rows() != mean.rows() || tau.cols() != mean.cols() || variance.size() != tau.rows()) {
        throw Error(Errc::shape_mismatch, "update_model_a inputs");
    }
    const auto& kern = simd::active();
    const auto n = static_cast<std::size_t>(tau.rows());
    ProbabilityField out(tau.rows(), tau.cols());
    for (Eigen::Index k = 0; k < tau.cols(); ++k) {
        kern.blend_precision(n, variance.data(), tau.col(k).data(), mean.col(k).data(), out.col(k).data());
    }
    return normalize_weights(std::move(out));
}

ProbabilityField precision_weighted_mean(std::span<const LocalStats> terms) {
    check_same_lattice(terms);
    const auto& kern = simd::active();
    const auto rows = terms.front().mean.rows();
    const auto cols = terms.front().mean.cols();
    const auto n = static_cast<std::size_t>(rows);

    ProbabilityField numer = ProbabilityField::Zero(rows, cols);
    Eigen::VectorXd denom = Eigen::VectorXd::Zero(rows);
    Eigen::VectorXd precision(rows);
    for (const auto& term : terms) {
        kern.reciprocal(n, term.variance.data(), precision.data());
        kern.axpy(n, 1.0, precision.data(), denom.data());
        for (Eigen::Index k = 0; k < cols; ++k) {
            kern.mul_acc(n, term.mean.col(k).data(), precision.data(), numer.col(k).data());
        }
    }
    ProbabilityField out(rows, cols);
    for (Eigen::Index k = 0; k < cols; ++k) {
        kern.divide(n, numer.col(k).data(), denom.data(), out.col(k).data());
    }
    return out;
}

ProbabilityField update_model_b(std::span<const LocalStats> stats_on_finest) {
    return normalize_weights(precision_weighted_mean(stats_on_finest));
}

ProbabilityField update_model_c(const LocalStats* previous, const LocalStats& current,
                                const LocalStats* next) {
    std::vector<LocalStats> terms;
    if (previous != nullptr) terms.push_back(*previous);
    terms.push_back(current);
    if (next != nullptr) terms.push_back(*next);
    return normalize_weights(precision_weighted_mean(terms));
}

ProbabilityField independent_layer_weights(const ProbabilityField& tau, const LocalStats& stats) {
    const Eigen::VectorXd precision = stats.variance.cwiseInverse();
    return tau + (stats.mean.array().colwise() * precision.array()).matrix();
}

ProbabilityField coupled_weights(std::span<const LocalStats> terms) {
    check_same_lattice(terms);
    ProbabilityField out = ProbabilityField::Zero(terms.front().mean.rows(), terms.front().mean.cols());
    for (const auto& t : terms) {
        out += (t.mean.array().colwise() / t.variance.array()).matrix();
    }
    return out;
}

std::vector<LayerInput> layer_inputs(const FeatureStack& stack) {
    validate(stack);
    std::vector<LayerInput> out;
    for (const auto& layer : stack.layers) out.push_back({layer.shape(), to_matrix(layer)});
    return out;
}

MultilayerState fit_multilayer(std::span<const LayerInput> layers, const ComponentDensity& density,
                               const MultilayerConfig& config) {
    return Fitter(layers, density, config).run();
}

MultilayerState fit_multilayer(const FeatureStack& stack, const ComponentDensity& density,
                               const MultilayerConfig& config) {
    const auto inputs = layer_inputs(stack);
    return fit_multilayer(inputs, density, config);
}

LabelMap pool_labels(const LabelMap& labels, GridShape to) {
    if (labels.shape() == to) return labels;
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.labels.size()),
                                                   static_cast<Eigen::Index>(labels.components));
    for (std::size_t n = 0; n < labels.labels.size(); ++n) {
        onehot(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(labels.labels[n])) = 1.0;
    }
    LabelMap out;
    out.height = static_cast<std::uint32_t>(to.height);
    out.width = static_cast<std::uint32_t>(to.width);
    out.components = labels.components;
    out.labels = argmax_rows(resample(onehot, labels.shape(), to));
    return out;
}

LabelMap extract_labels(const MultilayerState& state, std::size_t layer) {
    if (layer >= state.layers.size()) throw Error(Errc::invalid_argument, "layer index out of range");
    const auto& target = state.layers[layer];
    LabelMap out;
    out.height = static_cast<std::uint32_t>(target.shape.height);
    out.width = static_cast<std::uint32_t>(target.shape.width);
    out.components = static_cast<std::uint32_t>(state.components);
    if (state.variant == ModelVariant::shared_map) {
        LabelMap shared;
        const GridShape finest = state.layers.front().shape;
        shared.height = static_cast<std::uint32_t>(finest.height);
        shared.width = static_cast<std::uint32_t>(finest.width);
        shared.components = out.components;
        shared.labels = argmax_rows(state.shared_mixing);
        return pool_labels(shared, target.shape);
    }
    out.labels = argmax_rows(target.mixing);
    return out;
}

}  // namespace dirmix

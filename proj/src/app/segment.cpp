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

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dirmix/app.hpp"
#include "dirmix/em.hpp"
#include "dirmix/error.hpp"
#include "dirmix/feature_io.hpp"
#include "dirmix/preprocess.hpp"
#include "dirmix/simd/kernels.hpp"
#include "dirmix/tensor_file.hpp"

namespace dirmix {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string layer_prefix(std::size_t h) { return "layer" + std::to_string(h + 1); }

Tensor matrix_tensor(std::string name, const Eigen::MatrixXd& m) {
    Tensor t{std::move(name), {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, {}};
    t.values.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(m(r, c));
    }
    return t;
}

Tensor vector_tensor(std::string name, const std::vector<double>& v) {
    return {std::move(name), {static_cast<std::uint32_t>(v.size())}, v};
}

// height×width×K, pixel-major like the feature layers.
Tensor field_tensor(std::string name, const ProbabilityField& field, GridShape shape) {
    Tensor t{std::move(name),
             {static_cast<std::uint32_t>(shape.height), static_cast<std::uint32_t>(shape.width),
              static_cast<std::uint32_t>(field.cols())},
             {}};
    t.values.reserve(static_cast<std::size_t>(field.size()));
    for (Eigen::Index n = 0; n < field.rows(); ++n) {
        for (Eigen::Index k = 0; k < field.cols(); ++k) t.values.push_back(field(n, k));
    }
    return t;
}

Tensor stacked_tensor(std::string name, const std::vector<Eigen::MatrixXd>& mats) {
    const auto k = static_cast<std::uint32_t>(mats.size());
    const auto r = static_cast<std::uint32_t>(mats.empty() ? 0 : mats.front().rows());
    const auto c = static_cast<std::uint32_t>(mats.empty() ? 0 : mats.front().cols());
    Tensor t{std::move(name), {k, r, c}, {}};
    for (const auto& m : mats) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) t.values.push_back(m(i, j));
        }
    }
    return t;
}

Eigen::MatrixXd means_matrix(const std::vector<Eigen::VectorXd>& means) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(means.size()), means.empty() ? 0 : means.front().size());
    for (std::size_t k = 0; k < means.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = means[k].transpose();
    return m;
}

std::vector<Tensor> parameter_tensors(const MultilayerState& state, const std::vector<PcaModel>& pca) {
    std::vector<Tensor> out;
    for (std::size_t h = 0; h < state.layers.size(); ++h) {
        const auto& layer = state.layers[h];
        const std::string p = layer_prefix(h);
        if (const auto* g = std::get_if<GaussianParams>(&layer.params)) {
            out.push_back(matrix_tensor(p + "/means", means_matrix(g->means)));
            out.push_back(stacked_tensor(p + "/covariances", g->covariances));
        } else {
            const auto& s = std::get<StudentParams>(layer.params);
            out.push_back(matrix_tensor(p + "/means", means_matrix(s.means)));
            out.push_back(stacked_tensor(p + "/scales", s.scales));
            out.push_back(vector_tensor(p + "/dof", s.dof));
        }
        out.push_back(field_tensor(p + "/mixing", layer.mixing, layer.shape));
        out.push_back(vector_tensor(p + "/pca_mean",
                                    std::vector<double>(pca[h].mean.data(), pca[h].mean.data() + pca[h].mean.size())));
        out.push_back(matrix_tensor(p + "/pca_projection", pca[h].projection));
    }
    if (state.variant == ModelVariant::shared_map) {
        out.push_back(field_tensor("shared_mixing", state.shared_mixing, state.layers.front().shape));
    }
    return out;
}

// Log-posterior per layer and in total, then the observed-data
// log-likelihood in the same layout. Row 0 holds the initial values.
std::string trace_csv(const MultilayerState& state) {
    std::ostringstream out;
    out << "iteration";
    for (std::size_t h = 0; h < state.layers.size(); ++h) out << "," << layer_prefix(h);
    out << ",total";
    for (std::size_t h = 0; h < state.layers.size(); ++h) out << ",loglik_" << layer_prefix(h);
    out << ",loglik_total\n";
    out << 0;
    for (double v : state.initial_layer_values) out << "," << exact(v);
    out << "," << exact(state.initial_total);
    for (const auto& layer : state.layers) out << "," << exact(layer.initial_likelihood);
    out << "," << exact(state.initial_likelihood_total) << "\n";
    for (std::size_t t = 0; t < state.total_trace.size(); ++t) {
        out << t + 1;
        for (const auto& layer : state.layers) out << "," << exact(layer.trace[t]);
        out << "," << exact(state.total_trace[t]);
        for (const auto& layer : state.layers) out << "," << exact(layer.likelihood_trace[t]);
        out << "," << exact(state.likelihood_total[t]) << "\n";
    }
    return out.str();
}

void write_text(const fs::path& path, const std::string& text) {
    const auto* data = reinterpret_cast<const std::byte*>(text.data());
    write_file_bytes(path, {data, text.size()});
}

void write_run(const fs::path& dir, const RunConfig& config, std::size_t k, const FeatureStack& stack,
               const MultilayerState& state, const std::vector<PcaModel>& pca) {
    fs::create_directories(dir);
    json files;
    for (std::size_t h = 0; h < state.layers.size(); ++h) {
        const auto& layer = state.layers[h];
        const std::string labels = "labels_" + layer_prefix(h) + ".pgm";
        write_labelmap_pgm(extract_labels(state, h), dir / labels);
        files["labels"].push_back(labels);
        json probs = json::array();
        for (Eigen::Index c = 0; c < layer.mixing.cols(); ++c) {
            const std::string name = "prob_" + layer_prefix(h) + "_k" + std::to_string(c) + ".pgm";
            write_probability_pgm({layer.mixing.col(c).data(), static_cast<std::size_t>(layer.mixing.rows())},
                                  layer.shape, dir / name);
            probs.push_back(name);
        }
        files["probabilities"].push_back(probs);
    }
    write_text(dir / "trace.csv", trace_csv(state));
    files["trace"] = "trace.csv";
    const auto tensors = parameter_tensors(state, pca);
    write_tensor_file(dir / "params.bin", tensors);
    files["params"] = "params.bin";

    json manifest;
    manifest["tool"] = "dirmix";
    manifest["version"] = version();
    manifest["simd"] = simd::active().name;
    manifest["config"] = config_echo(config, k);
    for (std::size_t h = 0; h < state.layers.size(); ++h) {
        json layer;
        layer["index"] = h + 1;
        layer["height"] = state.layers[h].shape.height;
        layer["width"] = state.layers[h].shape.width;
        layer["channels"] = stack.layers[h].channels;
        layer["pca_dimension"] = pca[h].retained;
        layer["retained_variance"] = pca[h].retained_ratio();
        layer["sigma"] = state.kernels[h].sigma;
        layer["final_log_posterior"] = state.layers[h].trace.back();
        layer["final_log_likelihood"] = state.layers[h].likelihood_trace.back();
        manifest["layers"].push_back(layer);
    }
    const auto& d = state.diagnostics;
    manifest["diagnostics"] = {{"empty_component_resets", d.empty_component_resets},
                               {"dof_bracket_failures", d.dof_bracket_failures},
                               {"max_simplex_error", d.max_simplex_error},
                               {"min_local_variance", d.min_local_variance}};
    manifest["files"] = files;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace

void cmd_segment(const RunConfig& config) {
    validate(config);
    const FeatureStack stack = read_fmap(config.input);
    validate(stack);
    const std::size_t pixels = std::size_t{stack.layers.front().height} * stack.layers.front().width;
    for (auto k : config.components) {
        if (pixels <= k) {
            throw Error(Errc::invalid_config, "layer 1 has " + std::to_string(pixels) +
                                                  " pixels, too few for K=" + std::to_string(k));
        }
    }
    if (!config.sigmas.empty() && config.sigmas.size() < stack.layers.size()) {
        throw Error(Errc::invalid_config, "sigma schedule has " + std::to_string(config.sigmas.size()) +
                                              " entries for " + std::to_string(stack.layers.size()) + " layers");
    }

    std::vector<PcaModel> pca;
    const auto inputs = preprocess(stack, {config.augment, config.pca_threshold}, &pca);
    const ComponentDensity density(DensityConfig{config.density, config.estimate_dof, config.dof, config.shared_dof});
    for (auto k : config.components) {
        MultilayerConfig mc;
        mc.variant = config.variant;
        mc.components = k;
        mc.n_iter = config.n_iter;
        mc.sigmas = config.sigmas;
        mc.seed = config.seed;
        const MultilayerState state = fit_multilayer(inputs, density, mc);
        write_run(run_directory(config, k), config, k, stack, state, pca);
    }
}

}  // namespace dirmix

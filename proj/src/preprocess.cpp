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

#include "dirmix/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "dirmix/error.hpp"
#include "dirmix/parallel.hpp"
#include "dirmix/spatial.hpp"

namespace dirmix {

namespace {

constexpr double cumulative_tolerance = 1e-12;

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (std::abs(v(i)) > std::abs(v(best))) best = i;
    }
    if (v(best) < 0.0) v = -v;
}

}  // namespace

double PcaModel::retained_ratio() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < retained && i < explained.size(); ++i) sum += explained[i];
    return sum;
}

PcaModel pca_fit(const RowMatrix& data, double threshold) {
    if (data.rows() == 0 || data.cols() == 0) throw Error(Errc::invalid_argument, "empty data for PCA");
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw Error(Errc::invalid_config, "variance threshold must lie in (0, 1]");
    }
    const auto n = data.rows();
    const auto d = data.cols();
    PcaModel model;
    model.mean = data.colwise().mean().transpose();
    const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();

    // Eigenpairs sorted by decreasing eigenvalue; directions live in R^d.
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    if (n > d) {
        const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        values = solver.eigenvalues().reverse();
        vectors = solver.eigenvectors().rowwise().reverse();
    } else {
        const Eigen::MatrixXd gram = centered * centered.transpose() / static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        values = solver.eigenvalues().reverse();
        const Eigen::MatrixXd dual = solver.eigenvectors().rowwise().reverse();
        vectors = Eigen::MatrixXd::Zero(d, values.size());
        for (Eigen::Index j = 0; j < values.size(); ++j) {
            if (values(j) <= 0.0) continue;
            vectors.col(j) = centered.transpose() * dual.col(j) / std::sqrt(static_cast<double>(n) * values(j));
        }
    }
    values = values.cwiseMax(0.0);
    const double total = values.sum();

    if (!(total > 0.0)) {
        model.retained = 1;
        model.projection = Eigen::MatrixXd::Zero(d, 1);
        model.projection(0, 0) = 1.0;
        model.explained.assign(static_cast<std::size_t>(values.size()), 0.0);
        model.explained[0] = 1.0;
        return model;
    }

    model.explained.resize(static_cast<std::size_t>(values.size()));
    double cumulative = 0.0;
    for (Eigen::Index j = 0; j < values.size(); ++j) {
        model.explained[static_cast<std::size_t>(j)] = values(j) / total;
        if (model.retained == 0) {
            cumulative += values(j) / total;
            if (cumulative >= threshold - cumulative_tolerance) model.retained = static_cast<std::size_t>(j) + 1;
        }
    }
    if (model.retained == 0) model.retained = static_cast<std::size_t>(values.size());

    const auto r = static_cast<Eigen::Index>(model.retained);
    model.projection = vectors.leftCols(r);
    for (Eigen::Index j = 0; j < r; ++j) fix_sign(model.projection.col(j));
    return model;
}

PcaModel pca_fit(const LayerGrid& layer, double threshold) { return pca_fit(to_matrix(layer), threshold); }

RowMatrix pca_project(const PcaModel& model, const RowMatrix& data) {
    if (static_cast<std::size_t>(data.cols()) != model.input_dimension()) {
        throw Error(Errc::channel_mismatch, "PCA model expects " + std::to_string(model.input_dimension()) +
                                                " channels, got " + std::to_string(data.cols()));
    }
    return (data.rowwise() - model.mean.transpose()) * model.projection;
}

LayerGrid pca_transform(const PcaModel& model, const LayerGrid& layer) {
    return from_matrix(pca_project(model, to_matrix(layer)), layer.shape());
}

FeatureStack augment_with_layer1(const FeatureStack& stack) {
    if (stack.layers.size() <= 1) return stack;
    FeatureStack out = stack;
    const LayerGrid& first = stack.layers.front();
    const Eigen::MatrixXd base = to_matrix(first);
    for (std::size_t h = 1; h < stack.layers.size(); ++h) {
        const LayerGrid& layer = stack.layers[h];
        const Eigen::MatrixXd pooled = resample(base, first.shape(), layer.shape());
        RowMatrix joined(pooled.rows(), layer.channels + first.channels);
        joined.leftCols(layer.channels) = to_matrix(layer);
        joined.rightCols(first.channels) = pooled;
        out.layers[h] = from_matrix(joined, layer.shape());
    }
    return out;
}

std::vector<LayerInput> preprocess(const FeatureStack& stack, const PreprocessConfig& config,
                                   std::vector<PcaModel>* models) {
    validate(stack);
    const FeatureStack augmented = config.augment ? augment_with_layer1(stack) : stack;
    const std::size_t count = augmented.layers.size();
    std::vector<LayerInput> inputs(count);
    std::vector<PcaModel> fitted(count);
    parallel_for(count, [&](std::size_t h) {
        const RowMatrix features = to_matrix(augmented.layers[h]);
        fitted[h] = pca_fit(features, config.variance_threshold);
        inputs[h] = {augmented.layers[h].shape(), pca_project(fitted[h], features)};
    });
    if (models != nullptr) *models = std::move(fitted);
    return inputs;
}

}  // namespace dirmix

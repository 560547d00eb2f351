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

#include <fstream>

#include "dirmix/app.hpp"
#include "dirmix/error.hpp"
#include "dirmix/feature_io.hpp"
#include "dirmix/tensor_file.hpp"

namespace dirmix {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct SegmentMoments {
    std::size_t count = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

SegmentMoments masked_moments(const LayerGrid& layer, const LabelMap& labels, std::uint32_t k) {
    const Eigen::Index c = layer.channels;
    SegmentMoments m{0, Eigen::VectorXd::Zero(c), Eigen::MatrixXd::Zero(c, c)};
    for (std::size_t n = 0; n < labels.labels.size(); ++n) {
        if (labels.labels[n] != k) continue;
        const auto px = layer.pixel(n);
        for (Eigen::Index i = 0; i < c; ++i) m.mean(i) += px[static_cast<std::size_t>(i)];
        ++m.count;
    }
    if (m.count == 0) return m;
    m.mean /= static_cast<double>(m.count);
    Eigen::VectorXd diff(c);
    for (std::size_t n = 0; n < labels.labels.size(); ++n) {
        if (labels.labels[n] != k) continue;
        const auto px = layer.pixel(n);
        for (Eigen::Index i = 0; i < c; ++i) diff(i) = px[static_cast<std::size_t>(i)] - m.mean(i);
        m.covariance.noalias() += diff * diff.transpose();
    }
    m.covariance /= static_cast<double>(m.count);
    return m;
}

std::vector<Tensor> moment_tensors(const SegmentMoments& m) {
    const auto c = static_cast<std::uint32_t>(m.mean.size());
    Tensor mean{"mean", {c}, std::vector<double>(m.mean.data(), m.mean.data() + c)};
    Tensor cov{"covariance", {c, c}, {}};
    for (Eigen::Index i = 0; i < m.covariance.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.covariance.cols(); ++j) cov.values.push_back(m.covariance(i, j));
    }
    Tensor count{"count", {1}, {static_cast<double>(m.count)}};
    return {mean, cov, count};
}

}  // namespace

void cmd_export_synthesis(const ExportOptions& options) {
    if (options.layers < 1) throw Error(Errc::invalid_config, "synthesis layer count must be at least 1");
    const fs::path manifest_path = options.state / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw Error(Errc::io_failure, "no manifest.json in " + options.state.string());
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::invalid_argument, manifest_path.string() + ": " + e.what());
    }
    const fs::path input =
        options.input.empty() ? fs::path(manifest.at("config").at("input").get<std::string>()) : options.input;
    const FeatureStack stack = read_fmap(input);
    const auto components = manifest.at("config").at("K").get<std::uint32_t>();
    const auto& label_files = manifest.at("files").at("labels");
    const std::size_t layers = std::min({options.layers, label_files.size(), stack.layers.size()});

    std::vector<LabelMap> labels;
    for (std::size_t h = 0; h < layers; ++h) {
        labels.push_back(read_labelmap_pgm(options.state / label_files[h].get<std::string>()));
        if (labels.back().shape() != stack.layers[h].shape()) {
            throw Error(Errc::shape_mismatch, "label map of layer " + std::to_string(h + 1) +
                                                  " does not match the input lattice");
        }
    }

    const fs::path out = options.output.empty() ? options.state / "synthesis" : options.output;
    fs::create_directories(out);
    json bundle;
    bundle["version"] = version();
    bundle["source"] = input.string();
    bundle["layers"] = layers;
    bundle["components"] = components;
    bundle["entries"] = json::array();
    for (std::size_t h = 0; h < layers; ++h) {
        const LayerGrid& layer = stack.layers[h];
        for (std::uint32_t k = 0; k < components; ++k) {
            const std::string suffix = "layer" + std::to_string(h + 1) + "_k" + std::to_string(k);
            LabelMap mask = labels[h];
            mask.components = 256;
            for (auto& v : mask.labels) v = v == k ? 255 : 0;
            write_labelmap_pgm(mask, out / ("mask_" + suffix + ".pgm"));
            const SegmentMoments m = masked_moments(layer, labels[h], k);
            write_tensor_file(out / ("stats_" + suffix + ".bin"), moment_tensors(m));
            bundle["entries"].push_back({{"layer", h + 1},
                                         {"component", k},
                                         {"channels", layer.channels},
                                         {"pixels", m.count},
                                         {"mask", "mask_" + suffix + ".pgm"},
                                         {"stats", "stats_" + suffix + ".bin"}});
        }
    }
    const std::string text = bundle.dump(2) + "\n";
    write_file_bytes(out / "bundle.json", {reinterpret_cast<const std::byte*>(text.data()), text.size()});
}

}  // namespace dirmix

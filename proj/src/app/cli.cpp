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

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dirmix/app.hpp"
#include "dirmix/error.hpp"
#include "dirmix/feature_io.hpp"
#include "dirmix/parallel.hpp"
#include "dirmix/simd/kernels.hpp"
#include "dirmix/tensor_file.hpp"

namespace dirmix {

namespace {

namespace fs = std::filesystem;

// Exit codes by failure class.
constexpr int exit_config = 2;
constexpr int exit_io = 3;
constexpr int exit_format = 4;
constexpr int exit_numeric = 5;

int exit_code(Errc code) {
    switch (code) {
        case Errc::invalid_argument:
        case Errc::invalid_config:
        case Errc::missing_reference:
            return exit_config;
        case Errc::io_failure:
            return exit_io;
        case Errc::bad_magic:
        case Errc::truncated_payload:
        case Errc::non_finite_value:
        case Errc::too_many_components:
        case Errc::shape_mismatch:
        case Errc::channel_mismatch:
        case Errc::dimension_mismatch:
        case Errc::shrink_requested:
        case Errc::grow_requested:
            return exit_format;
        default:
            return exit_numeric;
    }
}

bool has_magic(const std::vector<std::byte>& bytes, const std::uint8_t (&magic)[8]) {
    return bytes.size() >= 8 && std::memcmp(bytes.data(), magic, 8) == 0;
}

void describe_build(std::ostream& out) {
    out << "dirmix " << version() << "\n";
    out << "simd: " << simd::active().name << " (avx2 " << (simd::avx2_available() ? "available" : "unavailable")
        << ")\n";
    out << "threads: " << worker_count() << "\n";
}

}  // namespace

void cmd_info(const fs::path& path, std::ostream& out) {
    if (path.empty()) {
        describe_build(out);
        return;
    }
    if (fs::is_directory(path)) {
        std::ifstream in(path / "manifest.json");
        if (!in) throw Error(Errc::io_failure, "no manifest.json in " + path.string());
        const auto manifest = nlohmann::json::parse(in);
        const auto& config = manifest.at("config");
        out << "run: variant " << config.at("variant").get<std::string>() << ", density "
            << config.at("density").get<std::string>() << ", K=" << config.at("K") << ", n_iter "
            << config.at("n_iter") << ", seed " << config.at("seed") << "\n";
        for (const auto& layer : manifest.at("layers")) {
            out << "  layer " << layer.at("index") << ": " << layer.at("height") << "x" << layer.at("width") << ", "
                << layer.at("channels") << " channels -> " << layer.at("pca_dimension") << ", sigma "
                << layer.at("sigma") << ", log-posterior " << layer.at("final_log_posterior") << "\n";
        }
        return;
    }
    const auto bytes = read_file_bytes(path);
    if (has_magic(bytes, fmap_magic)) {
        const FeatureStack stack = parse_fmap(bytes);
        out << "FMAP: " << stack.layers.size() << " layers\n";
        for (std::size_t h = 0; h < stack.layers.size(); ++h) {
            const auto& l = stack.layers[h];
            out << "  layer " << h + 1 << ": " << l.height << "x" << l.width << "x" << l.channels << "\n";
        }
    } else if (has_magic(bytes, tensor_magic)) {
        const auto tensors = decode_tensors(bytes);
        out << "tensors: " << tensors.size() << "\n";
        for (const auto& t : tensors) {
            out << "  " << t.name << " [";
            for (std::size_t i = 0; i < t.dims.size(); ++i) out << (i ? "x" : "") << t.dims[i];
            out << "]\n";
        }
    } else {
        throw Error(Errc::bad_magic, path.string() + " is neither an FMAP nor a tensor file");
    }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dirichlet-prior mixture segmentation of deep feature maps", "dirmix"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version());

    RunConfig defaults;
    fs::path config_path;
    std::string input, output, density, variant, dof_mode;
    std::vector<std::size_t> k_grid;
    std::vector<double> sigmas;
    std::optional<std::size_t> n_iter;
    std::optional<double> pca_threshold, dof;
    std::optional<std::uint64_t> seed;
    bool no_augment = false, shared_dof = false;

    auto* segment = app.add_subcommand("segment", "Fit a multilayer mixture to an FMAP feature stack");
    segment->add_option("--config", config_path, "JSON run configuration");
    segment->add_option("-i,--input", input, "Input FMAP file");
    segment->add_option("-o,--output", output, "Output directory");
    segment->add_option("--density", density, "gaussian | student");
    segment->add_option("--variant", variant, "a | b | c");
    segment->add_option("-K,--components", k_grid, "Number of components; several values run a sweep")
        ->delimiter(',');
    segment->add_option("--n-iter", n_iter, "EM sweeps");
    segment->add_option("--sigmas", sigmas, "Kernel width per layer")->delimiter(',');
    segment->add_option("--pca-threshold", pca_threshold, "Retained variance fraction");
    segment->add_flag("--no-augment", no_augment, "Do not append layer-1 features to deeper layers");
    segment->add_option("--dof-mode", dof_mode, "estimated | fixed");
    segment->add_option("--dof", dof, "Student-t degrees of freedom (initial or fixed)");
    segment->add_flag("--shared-dof", shared_dof, "One degrees-of-freedom value for all components");
    segment->add_option("--seed", seed, "RNG seed");

    EvalOptions eval_options;
    std::optional<double> radius;
    fs::path eval_out;
    auto* eval = app.add_subcommand("eval", "Score segmentations against reference label maps");
    eval->add_option("predictions", eval_options.predictions, "Directory of segment runs")->required();
    eval->add_option("references", eval_options.references, "Directory of reference PGMs")->required();
    eval->add_option("--radius", radius, "Boundary match radius in pixels");
    eval->add_option("-o,--output", eval_out, "CSV path (stdout when omitted)");

    ExportOptions export_options;
    auto* exporter = app.add_subcommand("export-synthesis", "Write masks and segment statistics for synthesis");
    exporter->add_option("state", export_options.state, "Directory of one segment run")->required();
    exporter->add_option("-o,--output", export_options.output, "Bundle directory");
    exporter->add_option("--layers", export_options.layers, "Number of leading layers to export");
    exporter->add_option("-i,--input", export_options.input, "FMAP overriding the one in the manifest");

    fs::path info_path;
    auto* info = app.add_subcommand("info", "Describe a run, an FMAP or a tensor file, or the build");
    info->add_option("path", info_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (segment->parsed()) {
            RunConfig config = config_path.empty() ? defaults : load_config(config_path, defaults);
            if (!input.empty()) config.input = input;
            if (!output.empty()) config.output = output;
            if (!density.empty()) config.density = density_family_from_string(density);
            if (!variant.empty()) config.variant = model_variant_from_string(variant);
            if (!k_grid.empty()) config.components = k_grid;
            if (n_iter) config.n_iter = *n_iter;
            if (!sigmas.empty()) config.sigmas = sigmas;
            if (pca_threshold) config.pca_threshold = *pca_threshold;
            if (no_augment) config.augment = false;
            if (!dof_mode.empty()) config = config_from_json({{"dof_mode", dof_mode}}, config);
            if (dof) config.dof = *dof;
            if (shared_dof) config.shared_dof = true;
            if (seed) config.seed = *seed;
            cmd_segment(config);
        } else if (eval->parsed()) {
            eval_options.match_radius = radius;
            const auto rows = cmd_eval(eval_options, &err);
            if (eval_out.empty()) {
                write_eval_csv(out, rows);
            } else {
                std::ofstream file(eval_out);
                if (!file) throw Error(Errc::io_failure, "cannot write " + eval_out.string());
                write_eval_csv(file, rows);
            }
        } else if (exporter->parsed()) {
            cmd_export_synthesis(export_options);
        } else if (info->parsed()) {
            cmd_info(info_path, out);
        }
    } catch (const Error& e) {
        err << "dirmix: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "dirmix: " << e.what() << "\n";
        return exit_io;
    }
    return 0;
}

}  // namespace dirmix

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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dirmix/densities.hpp"
#include "dirmix/multilayer.hpp"

namespace dirmix {

const char* version() noexcept;

struct RunConfig {
    std::filesystem::path input;
    std::filesystem::path output;
    DensityFamily density = DensityFamily::gaussian;
    ModelVariant variant = ModelVariant::chain_coupled;
    // One entry runs a single fit; several run a sweep into K<k>/ subdirectories.
    std::vector<std::size_t> components{2};
    std::size_t n_iter = 20;
    std::vector<double> sigmas;
    double pca_threshold = 0.90;
    bool augment = true;
    bool estimate_dof = true;
    double dof = dof_initial;
    bool shared_dof = false;
    std::uint64_t seed = 0;
};

/// Throws InvalidConfig naming the first offending field.
void validate(const RunConfig& config);

/// Keys: input, output, density, variant, K (integer or list), n_iter, sigmas,
/// pca_threshold, augment, dof_mode ("estimated" | "fixed"), dof, shared_dof,
/// seed. Unknown keys are rejected. Fields absent from `j` keep `base`.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Everything needed to reproduce one fit; the output directory is left out so
/// identical runs into different directories produce identical manifests.
nlohmann::json config_echo(const RunConfig& config, std::size_t components);

/// Output directory of one K value within a run.
std::filesystem::path run_directory(const RunConfig& config, std::size_t components);

/// Fits every K in the grid and writes labels_layer<h>.pgm,
/// prob_layer<h>_k<k>.pgm, trace.csv, params.bin and manifest.json per run.
void cmd_segment(const RunConfig& config);

struct EvalRow {
    std::string image;
    std::size_t layer = 0;  // 1-based; 0 marks a summary row
    std::size_t components = 0;
    std::string variant;
    double ari = 0.0;
    double fb = 0.0;
};

struct EvalOptions {
    std::filesystem::path predictions;
    std::filesystem::path references;
    // Defaults to 0.0075 × the reference diagonal.
    std::optional<double> match_radius;
};

/// Scores every (image, layer, K, variant) found below `predictions` (any
/// directory holding a manifest.json; the image id is its first path component)
/// against refs/<id>.pgm or every PGM in refs/<id>/. Appends one summary row
/// per (image, variant) with the best aRI and F_b over layers and K, then one
/// "mean" row per variant averaging those maxima. Throws MissingReference when
/// no image has references.
std::vector<EvalRow> cmd_eval(const EvalOptions& options, std::ostream* warnings = nullptr);
void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows);

inline constexpr std::size_t default_synthesis_layers = 5;

struct ExportOptions {
    std::filesystem::path state;
    // Defaults to <state>/synthesis.
    std::filesystem::path output;
    std::size_t layers = default_synthesis_layers;
    // Overrides the input FMAP recorded in the manifest.
    std::filesystem::path input;
};

/// Per (layer h ≤ H̄, component k): mask_layer<h>_k<k>.pgm (255 inside) and
/// stats_layer<h>_k<k>.bin holding "mean", "covariance" (1/|segment|) and
/// "count" over the raw input features, indexed by bundle.json.
void cmd_export_synthesis(const ExportOptions& options);

/// Describes a run directory, FMAP or tensor file, or the build when `path`
/// is empty.
void cmd_info(const std::filesystem::path& path, std::ostream& out);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dirmix

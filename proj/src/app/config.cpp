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

#include <cmath>
#include <fstream>
#include <set>

#include "dirmix/app.hpp"
#include "dirmix/error.hpp"

namespace dirmix {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::invalid_config, what); }

template <typename T>
T get_field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        bad(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

const char* version() noexcept { return DIRMIX_VERSION; }

void validate(const RunConfig& config) {
    if (config.input.empty()) bad("input path is required");
    if (config.output.empty()) bad("output directory is required");
    if (config.components.empty()) bad("K grid is empty");
    std::set<std::size_t> seen;
    for (auto k : config.components) {
        if (k < 2) bad("K must be at least 2, got " + std::to_string(k));
        if (k > 256) bad("K must fit a byte-valued label map, got " + std::to_string(k));
        if (!seen.insert(k).second) bad("K grid repeats " + std::to_string(k));
    }
    if (config.n_iter < 1) bad("n_iter must be at least 1");
    for (double s : config.sigmas) {
        if (!(s > 0.0) || !std::isfinite(s)) bad("sigma entries must be positive and finite");
    }
    if (!(config.pca_threshold > 0.0 && config.pca_threshold <= 1.0)) bad("pca_threshold must lie in (0, 1]");
    if (!(config.dof >= dof_min && config.dof <= dof_max)) {
        bad("dof must lie in [" + std::to_string(dof_min) + ", " + std::to_string(dof_max) + "]");
    }
}

RunConfig config_from_json(const json& j, RunConfig base) {
    if (!j.is_object()) bad("configuration must be a JSON object");
    static const std::set<std::string> known{"input", "output", "density", "variant", "K", "n_iter",
                                             "sigmas", "pca_threshold", "augment", "dof_mode", "dof",
                                             "shared_dof", "seed"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) bad("unknown key '" + key + "'");
    }
    RunConfig c = std::move(base);
    if (j.contains("input")) c.input = get_field<std::string>(j, "input");
    if (j.contains("output")) c.output = get_field<std::string>(j, "output");
    if (j.contains("density")) c.density = density_family_from_string(get_field<std::string>(j, "density"));
    if (j.contains("variant")) c.variant = model_variant_from_string(get_field<std::string>(j, "variant"));
    if (j.contains("K")) {
        if (j.at("K").is_array()) {
            c.components = get_field<std::vector<std::size_t>>(j, "K");
        } else {
            c.components = {get_field<std::size_t>(j, "K")};
        }
    }
    if (j.contains("n_iter")) c.n_iter = get_field<std::size_t>(j, "n_iter");
    if (j.contains("sigmas")) c.sigmas = get_field<std::vector<double>>(j, "sigmas");
    if (j.contains("pca_threshold")) c.pca_threshold = get_field<double>(j, "pca_threshold");
    if (j.contains("augment")) c.augment = get_field<bool>(j, "augment");
    if (j.contains("dof_mode")) {
        const auto mode = get_field<std::string>(j, "dof_mode");
        if (mode == "estimated") {
            c.estimate_dof = true;
        } else if (mode == "fixed") {
            c.estimate_dof = false;
        } else {
            bad("dof_mode must be 'estimated' or 'fixed'");
        }
    }
    if (j.contains("dof")) c.dof = get_field<double>(j, "dof");
    if (j.contains("shared_dof")) c.shared_dof = get_field<bool>(j, "shared_dof");
    if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed");
    return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        bad(path.string() + ": " + e.what());
    }
    return config_from_json(j, std::move(base));
}

json config_echo(const RunConfig& config, std::size_t components) {
    json j;
    j["input"] = config.input.string();
    j["density"] = to_string(config.density);
    j["variant"] = to_string(config.variant);
    j["K"] = components;
    j["n_iter"] = config.n_iter;
    j["sigmas"] = config.sigmas;
    j["pca_threshold"] = config.pca_threshold;
    j["augment"] = config.augment;
    j["dof_mode"] = config.estimate_dof ? "estimated" : "fixed";
    j["dof"] = config.dof;
    j["shared_dof"] = config.shared_dof;
    j["seed"] = config.seed;
    return j;
}

std::filesystem::path run_directory(const RunConfig& config, std::size_t components) {
    if (config.components.size() == 1) return config.output;
    return config.output / ("K" + std::to_string(components));
}

}  // namespace dirmix

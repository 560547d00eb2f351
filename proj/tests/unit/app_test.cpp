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
#include <map>
#include <sstream>

#include <doctest.h>

#include "common.hpp"
#include "dirmix/app.hpp"
#include "dirmix/error.hpp"
#include "dirmix/feature_io.hpp"
#include "dirmix/metrics.hpp"
#include "dirmix/tensor_file.hpp"
#include "synthetic.hpp"

using namespace dirmix;
using dirmix::testing::TempDir;
namespace fs = std::filesystem;

namespace {

// FMAP of a synthetic stack whose layers halve a side×side base lattice.
fs::path write_stack(const TempDir& dir, std::size_t layers, std::uint64_t seed, const std::string& name = "in.fmap",
                     std::size_t side = 16) {
    const auto synth = dirmix::testing::pooled_stack({side, side}, 3, layers, 2, 0.6, 6.0, seed);
    FeatureStack stack;
    for (const auto& layer : synth.layers) stack.layers.push_back(from_matrix(layer.features, layer.shape));
    const fs::path path = dir / name;
    write_fmap(stack, path);
    return path;
}

RunConfig quick_config(const fs::path& input, const fs::path& output) {
    RunConfig c;
    c.input = input;
    c.output = output;
    c.n_iter = 4;
    c.sigmas = {1.0, 0.75, 0.75, 0.75, 0.75, 0.75};
    return c;
}

std::size_t count_files(const fs::path& dir, const std::string& prefix) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.path().filename().string().rfind(prefix, 0) == 0;
    return n;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "dirmix");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text != nullptr) *out_text = out.str();
    if (err_text != nullptr) *err_text = err.str();
    return code;
}

}  // namespace

TEST_SUITE("app") {

TEST_CASE("segment writes the documented files for one layer") {
    TempDir dir;
    const auto input = write_stack(dir, 1, 1);
    auto config = quick_config(input, dir / "run");
    config.components = {2};
    cmd_segment(config);
    const fs::path run = dir / "run";
    CHECK(fs::exists(run / "labels_layer1.pgm"));
    CHECK(count_files(run, "labels_") == 1);
    CHECK(count_files(run, "prob_") == 2);
    CHECK(fs::exists(run / "prob_layer1_k0.pgm"));
    CHECK(fs::exists(run / "prob_layer1_k1.pgm"));
    CHECK(fs::exists(run / "params.bin"));
    CHECK(fs::exists(run / "manifest.json"));
    const auto trace = read_text(run / "trace.csv");
    CHECK(trace.rfind("iteration,layer1,total,loglik_layer1,loglik_total\n", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 1 + 1 + 4);

    const auto manifest = nlohmann::json::parse(read_text(run / "manifest.json"));
    CHECK(manifest.at("version") == version());
    CHECK(manifest.at("config").at("K") == 2);
    CHECK_FALSE(manifest.at("config").contains("output"));
    const auto tensors = read_tensor_file(run / "params.bin");
    CHECK(find_tensor(tensors, "layer1/mixing").dims == std::vector<std::uint32_t>{16, 16, 2});
    const auto labels = read_labelmap_pgm(run / "labels_layer1.pgm");
    CHECK(labels.shape() == GridShape{16, 16});
}

TEST_CASE("student runs store scales and degrees of freedom") {
    TempDir dir;
    auto config = quick_config(write_stack(dir, 2, 2), dir / "run");
    config.density = DensityFamily::student;
    config.variant = ModelVariant::shared_map;
    cmd_segment(config);
    const auto tensors = read_tensor_file(dir / "run" / "params.bin");
    CHECK(find_tensor(tensors, "layer2/dof").values.size() == 2);
    CHECK(find_tensor(tensors, "layer1/scales").dims.front() == 2);
    CHECK(find_tensor(tensors, "shared_mixing").dims == std::vector<std::uint32_t>{16, 16, 2});
}

TEST_CASE("a K grid writes one subdirectory per value") {
    TempDir dir;
    auto config = quick_config(write_stack(dir, 2, 3), dir / "run");
    config.components = {2, 3, 4};
    cmd_segment(config);
    for (int k : {2, 3, 4}) {
        const fs::path sub = dir / "run" / ("K" + std::to_string(k));
        CHECK(fs::exists(sub / "manifest.json"));
        CHECK(count_files(sub, "prob_layer2_") == static_cast<std::size_t>(k));
    }
}

TEST_CASE("invalid configurations are rejected before anything is written") {
    TempDir dir;
    const auto input = write_stack(dir, 2, 4);
    auto bad_k = quick_config(input, dir / "a");
    bad_k.components = {2, 1};
    DIRMIX_CHECK_ERRC(cmd_segment(bad_k), Errc::invalid_config);
    CHECK_FALSE(fs::exists(dir / "a"));
    auto bad_sigma = quick_config(input, dir / "b");
    bad_sigma.sigmas = {1.0, -1.0};
    DIRMIX_CHECK_ERRC(cmd_segment(bad_sigma), Errc::invalid_config);
    CHECK_FALSE(fs::exists(dir / "b"));
    auto bad_threshold = quick_config(input, dir / "c");
    bad_threshold.pca_threshold = 1.5;
    DIRMIX_CHECK_ERRC(cmd_segment(bad_threshold), Errc::invalid_config);
    auto bad_input = quick_config(dir / "missing.fmap", dir / "d");
    CHECK_THROWS_AS(cmd_segment(bad_input), Error);
    CHECK_FALSE(fs::exists(dir / "d"));
}

TEST_CASE("JSON configuration") {
    const auto c = config_from_json(nlohmann::json::parse(
        R"({"input": "x.fmap", "density": "student", "variant": "b", "K": [2, 5], "dof_mode": "fixed", "dof": 4})"));
    CHECK(c.density == DensityFamily::student);
    CHECK(c.variant == ModelVariant::shared_map);
    CHECK(c.components == std::vector<std::size_t>{2, 5});
    CHECK_FALSE(c.estimate_dof);
    CHECK(c.dof == 4.0);
    DIRMIX_CHECK_ERRC(config_from_json(nlohmann::json::parse(R"({"colour": 1})")), Errc::invalid_config);
    DIRMIX_CHECK_ERRC(config_from_json(nlohmann::json::parse(R"({"dof_mode": "sometimes"})")), Errc::invalid_config);
}

TEST_CASE("same configuration twice gives byte-identical outputs") {
    TempDir dir;
    const auto input = write_stack(dir, 2, 5);
    ::setenv("DIRMIX_THREADS", "1", 1);
    cmd_segment(quick_config(input, dir / "one"));
    cmd_segment(quick_config(input, dir / "two"));
    ::unsetenv("DIRMIX_THREADS");
    for (const auto& e : fs::directory_iterator(dir / "one")) {
        CHECK(read_file_bytes(e.path()) == read_file_bytes(dir / "two" / e.path().filename()));
    }
}

TEST_CASE("eval scores predictions against references") {
    TempDir dir;
    const auto input = write_stack(dir, 2, 6);
    auto config = quick_config(input, dir / "pred" / "img1");
    cmd_segment(config);
    fs::create_directories(dir / "refs");
    fs::copy_file(dir / "pred" / "img1" / "labels_layer1.pgm", dir / "refs" / "img1.pgm");

    const auto rows = cmd_eval({dir / "pred", dir / "refs", std::nullopt});
    std::size_t layer_rows = 0;
    for (const auto& r : rows) {
        if (r.layer == 1) {
            CHECK(r.ari == 1.0);
            CHECK(r.fb == 1.0);
        }
        layer_rows += r.layer != 0;
    }
    CHECK(layer_rows == 2);
    REQUIRE(rows.size() == 4);
    CHECK(rows[2].image == "img1");
    CHECK(rows[3].image == "mean");
    CHECK(rows[2].ari == 1.0);

    std::ostringstream csv;
    write_eval_csv(csv, rows);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);

    fs::remove(dir / "refs" / "img1.pgm");
    fs::copy_file(dir / "pred" / "img1" / "labels_layer1.pgm", dir / "refs" / "other.pgm");
    DIRMIX_CHECK_ERRC(cmd_eval({dir / "pred", dir / "refs", std::nullopt}), Errc::missing_reference);
}

TEST_CASE("eval summary keeps the best layer and K per image") {
    TempDir dir;
    const auto synth = dirmix::testing::pooled_stack({16, 16}, 3, 2, 2, 0.6, 6.0, 7);
    for (const std::string image : {"a", "b"}) {
        const auto input = write_stack(dir, 2, image == "a" ? 7 : 8, image + ".fmap");
        auto config = quick_config(input, dir / "pred" / image);
        config.components = {2, 3, 4, 5, 6};
        cmd_segment(config);
    }
    fs::create_directories(dir / "refs" / "a");
    fs::create_directories(dir / "refs" / "b");
    // Image a has two references, image b one.
    write_labelmap_pgm(synth.truth[0], dir / "refs" / "a" / "r1.pgm");
    write_labelmap_pgm(dirmix::testing::region_map({16, 16}, 4, 70), dir / "refs" / "a" / "r2.pgm");
    write_labelmap_pgm(dirmix::testing::region_map({16, 16}, 3, 71), dir / "refs" / "b.pgm");

    const auto rows = cmd_eval({dir / "pred", dir / "refs", 1.5});
    std::map<std::string, std::pair<double, double>> best;
    std::map<std::string, const EvalRow*> summary;
    const EvalRow* mean = nullptr;
    for (const auto& r : rows) {
        if (r.layer != 0) {
            auto [it, fresh] = best.try_emplace(r.image, r.ari, r.fb);
            it->second.first = std::max(it->second.first, r.ari);
            it->second.second = std::max(it->second.second, r.fb);
        } else if (r.image == "mean") {
            mean = &r;
        } else {
            summary[r.image] = &r;
        }
    }
    CHECK(best.size() == 2);
    REQUIRE(summary.size() == 2);
    REQUIRE(mean != nullptr);
    for (const auto& [image, values] : best) {
        CHECK(summary[image]->ari == values.first);
        CHECK(summary[image]->fb == values.second);
    }
    CHECK(mean->ari == doctest::Approx((best["a"].first + best["b"].first) / 2));
    CHECK(mean->fb == doctest::Approx((best["a"].second + best["b"].second) / 2));
}

TEST_CASE("synthesis export") {
    TempDir dir;
    const auto input = write_stack(dir, 6, 9, "in.fmap", 64);
    auto config = quick_config(input, dir / "run");
    config.components = {2};
    cmd_segment(config);
    cmd_export_synthesis({dir / "run", {}, 5, {}});
    const fs::path out = dir / "run" / "synthesis";
    CHECK(count_files(out, "mask_") == 10);
    CHECK(count_files(out, "stats_") == 10);
    const auto bundle = nlohmann::json::parse(read_text(out / "bundle.json"));
    CHECK(bundle.at("entries").size() == 10);

    const FeatureStack stack = read_fmap(input);
    for (std::size_t h = 0; h < 5; ++h) {
        const auto& layer = stack.layers[h];
        const auto labels = read_labelmap_pgm(dir / "run" / ("labels_layer" + std::to_string(h + 1) + ".pgm"));
        const std::size_t n_px = std::size_t{layer.height} * layer.width;
        std::vector<int> covered(n_px, 0);
        for (std::uint32_t k = 0; k < 2; ++k) {
            const std::string suffix = "layer" + std::to_string(h + 1) + "_k" + std::to_string(k);
            const auto mask = read_labelmap_pgm(out / ("mask_" + suffix + ".pgm"));
            REQUIRE(mask.labels.size() == n_px);
            std::vector<double> sum(layer.channels, 0.0);
            std::size_t count = 0;
            for (std::size_t n = 0; n < n_px; ++n) {
                CHECK((mask.labels[n] == 0 || mask.labels[n] == 255));
                if (mask.labels[n] != 255) continue;
                ++covered[n];
                ++count;
                CHECK(labels.labels[n] == k);
                for (std::size_t c = 0; c < layer.channels; ++c) sum[c] += layer.values[n * layer.channels + c];
            }
            const auto stats = read_tensor_file(out / ("stats_" + suffix + ".bin"));
            CHECK(find_tensor(stats, "count").values[0] == static_cast<double>(count));
            const auto& mean = find_tensor(stats, "mean");
            CHECK(find_tensor(stats, "covariance").dims == std::vector<std::uint32_t>{layer.channels, layer.channels});
            if (count == 0) continue;
            for (std::size_t c = 0; c < layer.channels; ++c) {
                CHECK(std::abs(mean.values[c] - sum[c] / static_cast<double>(count)) < 1e-10);
            }
        }
        for (int c : covered) CHECK(c == 1);
    }
}

TEST_CASE("command line") {
    TempDir dir;
    const auto input = write_stack(dir, 2, 10);
    std::string out, err;
    CHECK(cli({"info"}, &out) == 0);
    CHECK(out.find(version()) != std::string::npos);

    CHECK(cli({"segment", "-i", input.string(), "-o", (dir / "run").string(), "-K", "2,3", "--n-iter", "3",
               "--sigmas", "1,0.75", "--density", "student", "--variant", "a"}) == 0);
    CHECK(fs::exists(dir / "run" / "K3" / "manifest.json"));
    CHECK(cli({"info", (dir / "run" / "K2").string()}, &out) == 0);
    CHECK(out.find("K") != std::string::npos);
    CHECK(cli({"info", input.string()}, &out) == 0);
    CHECK(cli({"info", (dir / "run" / "K2" / "params.bin").string()}, &out) == 0);
    CHECK(out.find("layer1/means") != std::string::npos);

    CHECK(cli({"segment", "-i", input.string(), "-o", (dir / "bad").string(), "-K", "1"}, &out, &err) == 2);
    CHECK(err.find("InvalidConfig") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "bad"));
    CHECK(cli({"segment", "-i", (dir / "nope.fmap").string(), "-o", (dir / "bad").string()}, &out, &err) == 3);

    fs::create_directories(dir / "refs");
    CHECK(cli({"eval", (dir / "run").string(), (dir / "refs").string()}, &out, &err) == 2);
    CHECK(cli({"export-synthesis", (dir / "run" / "K2").string(), "--layers", "2"}) == 0);
    CHECK(count_files(dir / "run" / "K2" / "synthesis", "mask_") == 4);

    std::ofstream(dir / "junk.fmap") << "not a feature map";
    CHECK(cli({"info", (dir / "junk.fmap").string()}, &out, &err) != 0);
}

}  // TEST_SUITE

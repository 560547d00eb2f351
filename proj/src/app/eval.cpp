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
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "dirmix/app.hpp"
#include "dirmix/error.hpp"
#include "dirmix/feature_io.hpp"
#include "dirmix/metrics.hpp"

namespace dirmix {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::invalid_argument, path.string() + ": " + e.what());
    }
}

std::vector<fs::path> find_manifests(const fs::path& root) {
    std::vector<fs::path> out;
    if (fs::is_regular_file(root / "manifest.json")) out.push_back(root / "manifest.json");
    if (!fs::is_directory(root)) throw Error(Errc::io_failure, "not a directory: " + root.string());
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().filename() == "manifest.json" &&
            entry.path().parent_path() != root) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string image_id(const fs::path& root, const fs::path& run_dir) {
    const fs::path rel = fs::relative(run_dir, root);
    if (rel.empty() || rel == ".") {
        fs::path norm = fs::absolute(root).lexically_normal();
        if (norm.filename().empty()) norm = norm.parent_path();
        return norm.filename().string();
    }
    return rel.begin()->string();
}

std::vector<LabelMap> load_references(const fs::path& refs, const std::string& id) {
    std::vector<LabelMap> out;
    if (fs::is_regular_file(refs / (id + ".pgm"))) out.push_back(read_labelmap_pgm(refs / (id + ".pgm")));
    if (fs::is_directory(refs / id)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(refs / id)) {
            if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) out.push_back(read_labelmap_pgm(f));
    }
    return out;
}

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<EvalRow> cmd_eval(const EvalOptions& options, std::ostream* warnings) {
    const auto manifests = find_manifests(options.predictions);
    std::vector<EvalRow> rows;
    std::map<std::string, std::vector<LabelMap>> cache;
    for (const auto& manifest_path : manifests) {
        const fs::path run_dir = manifest_path.parent_path();
        const std::string id = image_id(options.predictions, run_dir);
        auto it = cache.find(id);
        if (it == cache.end()) it = cache.emplace(id, load_references(options.references, id)).first;
        const auto& refs = it->second;
        if (refs.empty()) {
            if (warnings) *warnings << "dirmix: no reference for image '" << id << "', skipped\n";
            continue;
        }
        const json manifest = read_json(manifest_path);
        const auto k = manifest.at("config").at("K").get<std::size_t>();
        const auto variant = manifest.at("config").at("variant").get<std::string>();
        const auto& labels = manifest.at("files").at("labels");
        const double radius =
            options.match_radius.value_or(default_match_radius(refs.front().height, refs.front().width));
        for (std::size_t h = 0; h < labels.size(); ++h) {
            const LabelMap raw = read_labelmap_pgm(run_dir / labels[h].get<std::string>());
            const LabelMap pred = pool_labels(raw, refs.front().shape());
            double ari = 0.0;
            for (const auto& ref : refs) ari += adjusted_rand_index(pred, ref);
            ari /= static_cast<double>(refs.size());
            rows.push_back({id, h + 1, k, variant, ari, boundary_f_score(pred, refs, radius)});
        }
    }
    if (rows.empty()) {
        throw Error(Errc::missing_reference, "no predicted image under " + options.predictions.string() +
                                                 " has references in " + options.references.string());
    }

    // Best layer and K per image, scored separately for each metric.
    std::map<std::pair<std::string, std::string>, EvalRow> best;
    for (const auto& r : rows) {
        auto [pos, inserted] = best.try_emplace({r.variant, r.image}, EvalRow{r.image, 0, 0, r.variant, r.ari, r.fb});
        if (!inserted) {
            pos->second.ari = std::max(pos->second.ari, r.ari);
            pos->second.fb = std::max(pos->second.fb, r.fb);
        }
    }
    std::map<std::string, std::pair<EvalRow, std::size_t>> means;
    for (const auto& [key, r] : best) {
        rows.push_back(r);
        auto& [sum, count] = means.try_emplace(r.variant, EvalRow{"mean", 0, 0, r.variant, 0.0, 0.0}, 0).first->second;
        sum.ari += r.ari;
        sum.fb += r.fb;
        ++count;
    }
    for (auto& [variant, entry] : means) {
        entry.first.ari /= static_cast<double>(entry.second);
        entry.first.fb /= static_cast<double>(entry.second);
        rows.push_back(entry.first);
    }
    return rows;
}

void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows) {
    out << "image,layer,K,variant,aRI,F_b\n";
    for (const auto& r : rows) {
        out << r.image << ",";
        if (r.layer == 0) {
            out << "best,best,";
        } else {
            out << r.layer << "," << r.components << ",";
        }
        out << r.variant << "," << exact(r.ari) << "," << exact(r.fb) << "\n";
    }
}

}  // namespace dirmix

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

// Acceptance gate: prints one PASS/FAIL line per primary criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "dirmix/app.hpp"
#include "dirmix/em.hpp"
#include "dirmix/feature_io.hpp"
#include "dirmix/metrics.hpp"
#include "dirmix/multilayer.hpp"
#include "dirmix/update_rule.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace dirmix;
using dirmix::testing::Normal;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Invariant extrema over every fit the gate performs.
Diagnostics g_invariants;

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

ComponentDensity gaussian() { return ComponentDensity(DensityConfig{DensityFamily::gaussian}); }
ComponentDensity student() { return ComponentDensity(DensityConfig{DensityFamily::student}); }

LabelMap labels_of(const std::vector<std::uint32_t>& labels, GridShape shape, std::size_t k) {
    return dirmix::testing::make_labelmap(shape, static_cast<std::uint32_t>(k), labels);
}

double ari_flat(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b, std::size_t k) {
    const GridShape line{1, a.size()};
    return adjusted_rand_index(labels_of(a, line, k), labels_of(b, line, k));
}

const std::vector<Eigen::VectorXd>& means_of(const ComponentParams& p) {
    if (const auto* g = std::get_if<GaussianParams>(&p)) return g->means;
    return std::get<StudentParams>(p).means;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Eigen::VectorXd> centers{Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 0.5), Eigen::Vector2d(0.5, 3)};
    const auto data = dirmix::testing::gaussian_clusters(centers, 1.0, 300, 2024).data;
    const auto density = gaussian();
    Diagnostics diag;
    EMInit init = initialize(density, data, 3, 11, diag);
    const auto& start = std::get<GaussianParams>(init.params);
    oracle::Gmm g{{1.0 / 3, 1.0 / 3, 1.0 / 3}, start.means, start.covariances};

    const FitResult fit = run_em(density, data, ColumnSumRule{}, EMConfig{25, 0.0, 11}, init);
    g_invariants.merge(fit.diagnostics);
    const oracle::Gmm ref = oracle::gmm_em(data, g, 25);
    const auto& got = std::get<GaussianParams>(fit.params);

    // Align components by the permutation with the closest means.
    std::vector<int> perm{0, 1, 2}, best;
    double best_cost = 1e300;
    do {
        double cost = 0.0;
        for (int k = 0; k < 3; ++k) cost += (got.means[k] - ref.means[perm[k]]).norm();
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
        worst = std::max(worst, (got.means[k] - ref.means[best[k]]).cwiseAbs().maxCoeff());
        worst = std::max(worst, (got.covariances[k] - ref.covariances[best[k]]).cwiseAbs().maxCoeff());
        worst = std::max(worst, std::abs(fit.mixing(0, k) - ref.weights[best[k]]));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst <= 1e-6 && secs < 5.0, "max |Δparam| " + fmt("%.3g", worst) + ", " + fmt("%.2f s", secs)};
}

bool non_decreasing(double initial, const std::vector<double>& trace, double& worst_drop) {
    double prev = initial;
    bool ok = true;
    for (double v : trace) {
        const double drop = (prev - v) / std::max(std::abs(prev), 1e-300);
        worst_drop = std::max(worst_drop, drop);
        if (drop > 1e-8) ok = false;
        prev = v;
    }
    return ok;
}

// Tallies of non-monotone traces per run category.
struct MonotoneTally {
    std::size_t runs = 0;
    std::size_t posterior_failures = 0;
    std::size_t likelihood_failures = 0;
    double posterior_worst = 0.0;
    double likelihood_worst = 0.0;
};

Outcome monotone_traces() {
    const auto t0 = std::chrono::steady_clock::now();
    const GridShape shape{16, 16};
    std::vector<std::pair<std::string, MonotoneTally>> tallies;
    auto tally = [&](const std::string& key) -> MonotoneTally& {
        for (auto& [k, t] : tallies) {
            if (k == key) return t;
        }
        return tallies.emplace_back(key, MonotoneTally{}).second;
    };
    for (int family = 0; family < 2; ++family) {
        const auto density = family == 0 ? gaussian() : student();
        const std::string fam = family == 0 ? "GMM" : "SMM";
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto stack = dirmix::testing::pooled_stack(shape, 3, 2, 2, 0.8, 3.0, seed);
            const auto& layer = stack.layers.front();
            const ColumnSumRule column;
            const IdentityRule identity;
            const ConvolutionRule conv(shape, gaussian_kernel(1.5));
            const UpdateRule* rules[] = {&column, &identity, &conv};
            for (const auto* rule : rules) {
                const FitResult fit = run_em(density, layer.features, 3, *rule, EMConfig{20, 0.0, seed});
                g_invariants.merge(fit.diagnostics);
                auto& t = tally(fam + "/" + rule->name());
                ++t.runs;
                t.posterior_failures += !non_decreasing(fit.initial_log_posterior, fit.trace, t.posterior_worst);
                t.likelihood_failures +=
                    !non_decreasing(fit.initial_log_likelihood, fit.likelihood_trace, t.likelihood_worst);
            }
            for (auto variant : {ModelVariant::independent_layers, ModelVariant::shared_map,
                                 ModelVariant::chain_coupled}) {
                MultilayerConfig mc;
                mc.variant = variant;
                mc.components = 3;
                mc.n_iter = 15;
                mc.sigmas = {1.5, 0.75};
                mc.seed = seed;
                const auto state = fit_multilayer(stack.layers, density, mc);
                g_invariants.merge(state.diagnostics);
                auto& t = tally(fam + "/" + to_string(variant));
                ++t.runs;
                bool post = non_decreasing(state.initial_total, state.total_trace, t.posterior_worst);
                bool lik = non_decreasing(state.initial_likelihood_total, state.likelihood_total, t.likelihood_worst);
                for (const auto& ls : state.layers) {
                    const auto h = static_cast<std::size_t>(&ls - state.layers.data());
                    post = non_decreasing(state.initial_layer_values[h], ls.trace, t.posterior_worst) && post;
                    lik = non_decreasing(ls.initial_likelihood, ls.likelihood_trace, t.likelihood_worst) && lik;
                }
                t.posterior_failures += !post;
                t.likelihood_failures += !lik;
            }
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::size_t runs = 0, post_fail = 0, lik_fail = 0;
    std::string breakdown;
    for (const auto& [key, t] : tallies) {
        runs += t.runs;
        post_fail += t.posterior_failures;
        lik_fail += t.likelihood_failures;
        breakdown += "\n      " + key + ": log-posterior " + std::to_string(t.runs - t.posterior_failures) + "/" +
                     std::to_string(t.runs) + " (worst drop " + fmt("%.2g", t.posterior_worst) + "), likelihood " +
                     std::to_string(t.runs - t.likelihood_failures) + "/" + std::to_string(t.runs) +
                     " (worst drop " + fmt("%.2g", t.likelihood_worst) + ")";
    }
    std::string detail = std::to_string(runs - post_fail) + "/" + std::to_string(runs) +
                         " log-posterior traces monotone (observed likelihood: " + std::to_string(runs - lik_fail) +
                         "/" + std::to_string(runs) + "), " + fmt("%.1f s", secs) + breakdown;
    return {post_fail == 0 && secs < 120.0, detail};
}

// Generic-engine rules assembled from frozen variances, with each local mean
// recomputed from the responsibilities the rule receives.
class CoupledRule final : public UpdateRule {
public:
    struct Term {
        GridShape shape;
        GaussianKernel kernel;
        Eigen::VectorXd variance;
        ProbabilityField tau;  // unused for the term fed through weights()
    };
    CoupledRule(std::vector<Term> terms, std::size_t self, bool with_pixel_term)
        : terms_(std::move(terms)), self_(self), pixel_(with_pixel_term) {}
    std::string name() const override { return "coupled"; }
    ProbabilityField weights(const ProbabilityField& tau) const override {
        ProbabilityField f = pixel_ ? tau : ProbabilityField::Zero(tau.rows(), tau.cols());
        for (std::size_t h = 0; h < terms_.size(); ++h) {
            const auto& t = terms_[h];
            const ProbabilityField m = local_mean(h == self_ ? tau : t.tau, t.shape, t.kernel);
            f += (m.array().colwise() / t.variance.array()).matrix();
        }
        return f;
    }

private:
    std::vector<Term> terms_;
    std::size_t self_;
    bool pixel_;
};

Outcome rule_specialization() {
    Normal rng(77);
    double worst_a = 0.0, worst_b = 0.0, worst_c = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const GridShape shape{4 + rng.index(9), 4 + rng.index(9)};
        const auto k = static_cast<Eigen::Index>(2 + rng.index(3));
        const auto n = static_cast<Eigen::Index>(shape.size());

        // (a)
        {
            const auto tau = dirmix::testing::random_simplex_field(n, k, rng);
            const auto kernel = gaussian_kernel(0.5 + 3.0 * rng.uniform());
            const auto stats = local_stats(tau, shape, kernel);
            const auto fast = update_model_a(tau, stats.mean, stats.variance);
            const CoupledRule rule({{shape, kernel, stats.variance, {}}}, 0, true);
            worst_a = std::max(worst_a, (fast - apply_update_rule(rule, tau)).cwiseAbs().maxCoeff());
        }
        // (b) and (c): every term on one lattice
        const std::size_t layers = 2 + rng.index(3);
        std::vector<CoupledRule::Term> terms;
        std::vector<LocalStats> stats;
        for (std::size_t h = 0; h < layers; ++h) {
            const auto tau = dirmix::testing::random_simplex_field(n, k, rng);
            const auto kernel = gaussian_kernel(0.5 + 3.0 * rng.uniform());
            stats.push_back(local_stats(tau, shape, kernel));
            terms.push_back({shape, kernel, stats.back().variance, tau});
        }
        {
            const auto fast = update_model_b(stats);
            const CoupledRule rule(terms, 0, false);
            worst_b = std::max(worst_b, (fast - apply_update_rule(rule, terms[0].tau)).cwiseAbs().maxCoeff());
        }
        {
            const std::size_t h = rng.index(layers);
            const LocalStats* prev = h > 0 ? &stats[h - 1] : nullptr;
            const LocalStats* next = h + 1 < layers ? &stats[h + 1] : nullptr;
            const auto fast = update_model_c(prev, stats[h], next);
            std::vector<CoupledRule::Term> chain;
            std::size_t self = 0;
            for (std::size_t j = (h > 0 ? h - 1 : 0); j <= std::min(h + 1, layers - 1); ++j) {
                if (j == h) self = chain.size();
                chain.push_back(terms[j]);
            }
            const CoupledRule rule(chain, self, false);
            worst_c = std::max(worst_c, (fast - apply_update_rule(rule, terms[h].tau)).cwiseAbs().maxCoeff());
        }
    }
    const double worst = std::max({worst_a, worst_b, worst_c});
    return {worst <= 1e-12, "max |Δp| a " + fmt("%.2g", worst_a) + ", b " + fmt("%.2g", worst_b) + ", c " +
                                fmt("%.2g", worst_c) + " over 100 inputs each"};
}

Outcome student_advantage() {
    const auto t0 = std::chrono::steady_clock::now();
    const int dof = 3;
    const double scale = 1.0;
    const double sd = scale * std::sqrt(dof / (dof - 2.0));
    std::vector<Eigen::VectorXd> centers{Eigen::Vector2d(0, 0), Eigen::Vector2d(3.0 * sd, 0)};
    double sum_g = 0.0, sum_s = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto sample = dirmix::testing::student_clusters(centers, scale, dof, 2000, 1000 + seed);
        const EMConfig config{200, 1e-8, seed};
        const auto g = run_em(gaussian(), sample.data, 2, ColumnSumRule{}, config);
        const auto s = run_em(student(), sample.data, 2, ColumnSumRule{}, config);
        g_invariants.merge(g.diagnostics);
        g_invariants.merge(s.diagnostics);
        sum_g += ari_flat(argmax_rows(g.responsibilities), sample.labels, 2);
        sum_s += ari_flat(argmax_rows(s.responsibilities), sample.labels, 2);
    }
    const double mean_g = sum_g / 20.0, mean_s = sum_s / 20.0;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {mean_s > mean_g && mean_s >= 0.8 && secs < 180.0,
            "mean aRI SMM " + fmt("%.4f", mean_s) + " vs GMM " + fmt("%.4f", mean_g) + ", " + fmt("%.1f s", secs)};
}

Outcome coupling_helps() {
    const auto t0 = std::chrono::steady_clock::now();
    double sum_a = 0.0, sum_c = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto stack = dirmix::testing::pooled_stack({32, 32}, 3, 2, 4, 0.8, 0.0, 500 + seed);
        double ari[2];
        int i = 0;
        for (auto variant : {ModelVariant::independent_layers, ModelVariant::chain_coupled}) {
            MultilayerConfig mc;
            mc.variant = variant;
            mc.components = 3;
            mc.n_iter = 20;
            mc.sigmas = {2.25, 0.75};
            mc.seed = seed;
            const auto state = fit_multilayer(stack.layers, gaussian(), mc);
            g_invariants.merge(state.diagnostics);
            ari[i++] = adjusted_rand_index(extract_labels(state, 1), stack.truth[1]);
        }
        sum_a += ari[0];
        sum_c += ari[1];
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {sum_c >= sum_a && secs < 180.0, "layer-2 mean aRI (c) " + fmt("%.4f", sum_c / 20) + " vs (a) " +
                                                fmt("%.4f", sum_a / 20) + ", " + fmt("%.1f s", secs)};
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dirmix-acceptance-" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

FeatureStack stack_to_fmap(const dirmix::testing::SyntheticStack& s) {
    FeatureStack fm;
    for (const auto& layer : s.layers) fm.layers.push_back(from_matrix(layer.features, layer.shape));
    return fm;
}

Outcome variant_b_consistency() {
    const fs::path dir = scratch_dir("variant-b");
    const auto stack = dirmix::testing::pooled_stack({32, 32}, 3, 3, 2, 0.8, 3.0, 99);
    write_fmap(stack_to_fmap(stack), dir / "input.fmap");
    RunConfig config;
    config.input = dir / "input.fmap";
    config.output = dir / "run";
    config.variant = ModelVariant::shared_map;
    config.components = {3};
    config.n_iter = 10;
    cmd_segment(config);
    const LabelMap shared = read_labelmap_pgm(dir / "run" / "labels_layer1.pgm");
    std::size_t consistent = 0;
    for (std::size_t h = 0; h < 3; ++h) {
        const LabelMap got = read_labelmap_pgm(dir / "run" / ("labels_layer" + std::to_string(h + 1) + ".pgm"));
        const LabelMap want = pool_labels(shared, got.shape());
        if (got.labels == want.labels) ++consistent;
    }
    return {consistent == 3, std::to_string(consistent) + "/3 exported layers equal the pooled shared map"};
}

std::vector<std::vector<std::uint32_t>> partitions_of_six() {
    std::vector<std::vector<std::uint32_t>> out;
    std::vector<std::uint32_t> cur(6, 0);
    std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t i, std::uint32_t blocks) {
        if (i == 6) {
            out.push_back(cur);
            return;
        }
        for (std::uint32_t b = 0; b <= std::min<std::uint32_t>(blocks, 2); ++b) {
            cur[i] = b;
            rec(i + 1, std::max(blocks, b + 1));
        }
    };
    rec(0, 0);
    return out;
}

Outcome metric_checks() {
    std::vector<std::string> failed;
    // Identical partitions.
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = dirmix::testing::random_partition({25, 40}, 2 + seed % 5, seed);
        if (adjusted_rand_index(p, p) != 1.0) {
            failed.push_back("identical");
            break;
        }
    }
    // Chance level.
    double sum = 0.0;
    for (std::uint64_t t = 0; t < 200; ++t) {
        sum += adjusted_rand_index(dirmix::testing::random_partition({1, 1000}, 4, 2 * t + 1),
                                   dirmix::testing::random_partition({1, 1000}, 4, 2 * t + 2));
    }
    const double chance = sum / 200.0;
    if (!(std::abs(chance) < 0.05)) failed.push_back("chance");
    // 8×8 boundary shifted by one column.
    std::vector<std::uint32_t> ref(64), pred(64);
    for (std::size_t n = 0; n < 64; ++n) {
        ref[n] = n % 8 < 4 ? 0 : 1;
        pred[n] = n % 8 < 5 ? 0 : 1;
    }
    const LabelMap r = labels_of(ref, {8, 8}, 2), p = labels_of(pred, {8, 8}, 2);
    const std::vector<LabelMap> refs{r};
    const auto wide = boundary_score(p, refs, 2.0);
    const auto tight = boundary_score(p, refs, 0.0);
    if (!(wide.precision == 1.0 && wide.recall == 1.0 && wide.f == 1.0 && tight.f == 0.0)) failed.push_back("F_b 8x8");
    // All partitions of six elements into at most three blocks.
    const auto parts = partitions_of_six();
    double worst = 0.0;
    for (const auto& a : parts) {
        for (const auto& b : parts) worst = std::max(worst, std::abs(ari_flat(a, b, 3) - oracle::pair_count_ari(a, b)));
    }
    if (!(worst <= 1e-12)) failed.push_back("pair oracle");
    std::string detail = "chance mean " + fmt("%.4f", chance) + ", F_b(r=2) " + fmt("%.3g", wide.f) + ", F_b(r=0) " +
                         fmt("%.3g", tight.f) + ", " + std::to_string(parts.size()) + "² partition pairs max |Δ| " +
                         fmt("%.2g", worst);
    for (const auto& f : failed) detail += ", FAILED " + f;
    return {failed.empty(), detail};
}

std::vector<std::pair<fs::path, std::string>> tree_bytes(const fs::path& root) {
    std::vector<std::pair<fs::path, std::string>> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto bytes = read_file_bytes(e.path());
        out.emplace_back(fs::relative(e.path(), root), std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

Outcome determinism() {
    ::setenv("DIRMIX_THREADS", "1", 1);
    const fs::path dir = scratch_dir("determinism");
    const auto stack = dirmix::testing::pooled_stack({24, 24}, 3, 3, 2, 0.8, 3.0, 5);
    write_fmap(stack_to_fmap(stack), dir / "input.fmap");
    std::vector<std::vector<std::pair<fs::path, std::string>>> trees;
    for (int run = 0; run < 2; ++run) {
        RunConfig config;
        config.input = dir / "input.fmap";
        config.output = dir / ("run" + std::to_string(run));
        config.density = DensityFamily::student;
        config.variant = ModelVariant::chain_coupled;
        config.components = {2, 3};
        config.n_iter = 8;
        cmd_segment(config);
        cmd_export_synthesis({config.output / "K3", {}, 5, {}});
        trees.push_back(tree_bytes(config.output));
    }
    ::unsetenv("DIRMIX_THREADS");
    const bool same = trees[0] == trees[1];
    return {same && !trees[0].empty(),
            std::to_string(trees[0].size()) + " artifacts per run, " + (same ? "byte-identical" : "differ")};
}

Outcome invariants() {
    const bool ok = g_invariants.max_simplex_error <= 1e-9 && g_invariants.local_variance_seen &&
                    g_invariants.min_local_variance >= variance_floor;
    return {ok, "max row-sum error " + fmt("%.3g", g_invariants.max_simplex_error) + ", min s² " +
                    fmt("%.3g", g_invariants.min_local_variance) + " (floor 1e-8)"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    // Invariants last: it audits every fit made by the criteria before it.
    const Criterion criteria[] = {
        {"oracle-equivalence", oracle_equivalence},
        {"monotone-log-posterior", monotone_traces},
        {"update-rule-specialization", rule_specialization},
        {"student-t-advantage", student_advantage},
        {"cross-layer-coupling", coupling_helps},
        {"shared-map-consistency", variant_b_consistency},
        {"metrics", metric_checks},
        {"determinism", determinism},
        {"simplex-and-variance-invariants", invariants},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s  %-32s %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    fs::remove_all(fs::temp_directory_path() / ("dirmix-acceptance-" + std::to_string(::getpid())));
    std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
    return failures == 0 ? 0 : 1;
}

// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Each criterion prints exactly one line:
//   PASS criterion N: <summary>
//   FAIL criterion N: <summary>
// Run all of them (default) or one with --criterion N. The exit status is
// nonzero when any selected criterion fails.

#include "splatvox/aggregators.hpp"
#include "splatvox/cli.hpp"
#include "splatvox/depth_init.hpp"
#include "splatvox/gmf_attention.hpp"
#include "splatvox/losses_metrics.hpp"
#include "splatvox/scene_io.hpp"
#include "splatvox/scenes.hpp"
#include "splatvox/spatial_index.hpp"
#include "test_support.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>
#include <string>
#include <vector>

namespace splatvox {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(double v) { return format_number(v); }

// --- CLI plumbing ------------------------------------------------------------------

struct CliRun {
    int code = 0;
    std::map<std::string, std::string> fields;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "splatvox");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    CliRun r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    std::istringstream lines(r.out);
    std::string line;
    while (std::getline(lines, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos)
            r.fields[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return r;
}

double field(const CliRun& r, const std::string& key) {
    const auto it = r.fields.find(key);
    return it == r.fields.end() ? std::nan("") : std::stod(it->second);
}

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("splatvox_acceptance_" + tag)) {
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const char* name) const { return (path / name).string(); }
};

// --- independent oracles -----------------------------------------------------------

double oracle_pdf(const Vec3& x, const GaussianPrimitive& g) {
    const Mat3 cov = covariance(g.scale(), g.rotation());
    const Vec3 d = x - g.mean();
    return std::exp(-0.5 * d.dot(cov.inverse() * d)) /
           (std::pow(2.0 * std::numbers::pi, 1.5) * std::sqrt(cov.determinant()));
}

std::vector<double> oracle_softmax(const std::vector<double>& logits) {
    double m = logits[0];
    for (double l : logits)
        m = std::max(m, l);
    std::vector<double> w;
    double s = 0.0;
    for (double l : logits) {
        w.push_back(std::exp(l - m));
        s += w.back();
    }
    for (double& v : w)
        v /= s;
    return w;
}

// sum_i p_i c_i^k / sum_j sum_l p_j c_j^l, before collapsing the inner sum to 1.
std::vector<double> double_sum_semantics(const Vec3& x, std::span<const PrimitiveId> ids,
                                         const GaussianSet& set) {
    const std::size_t k = set[ids[0]].num_semantic();
    std::vector<double> num(k, 0.0);
    double den = 0.0;
    for (PrimitiveId i : ids) {
        const double p = oracle_pdf(x, set[i]);
        const auto c = oracle_softmax(set[i].semantic_logits());
        for (std::size_t l = 0; l < k; ++l)
            num[l] += p * c[l];
    }
    for (PrimitiveId j : ids) {
        const double p = oracle_pdf(x, set[j]);
        const auto c = oracle_softmax(set[j].semantic_logits());
        for (std::size_t l = 0; l < k; ++l)
            den += p * c[l];
    }
    for (double& v : num)
        v /= den;
    return num;
}

struct Instance {
    GaussianSet set;
    std::vector<PrimitiveId> ids;
    Vec3 x;
};

Instance random_instance(Rng& rng) {
    Instance in;
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 12);
    for (std::size_t i = 0; i < n; ++i)
        in.set.push_back(testing::random_primitive(rng, 6, Vec3::Constant(-0.3), Vec3::Constant(0.3), 0.1, 0.4));
    in.ids.resize(n);
    std::iota(in.ids.begin(), in.ids.end(), 0u);
    in.x = testing::random_point(rng, Vec3::Constant(-0.3), Vec3::Constant(0.3));
    return in;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// --- criteria ----------------------------------------------------------------------

Outcome floater_pathology() {
    const auto start = Clock::now();
    const CliRun r = cli({"demo-floater", "--opacity", "0.01", "--cluster", "50"});
    const double elapsed = seconds_since(start);
    const double posterior = field(r, "pgs_posterior");
    const double dga = field(r, "dga_occupied_prob");
    const bool pass = r.code == 0 && posterior >= 0.99 && dga <= 0.011 && elapsed < 1.0;
    return {pass, "PGS outlier posterior " + fmt(posterior) + " (>= 0.99), DGA fused " + fmt(dga) +
                      " (<= 0.011), " + fmt(elapsed) + " s (< 1 s)"};
}

Outcome normalization() {
    const auto start = Clock::now();
    const VoxelGridSpec spec = testing::small_grid();
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng pick(1000 + seed);
        const auto count = static_cast<std::size_t>(pick.uniform() * 301.0);
        const GaussianSet set = testing::random_set(seed, std::min<std::size_t>(count, 300), spec, 12);
        const SpatialIndex index = SpatialIndex::build(set);
        for (auto mode : {AggregatorMode::Pgs, AggregatorMode::Dga}) {
            const auto grid = splat(set, spec, 12, mode, index);
            for (std::size_t v = 0; v < grid.voxel_count(); ++v) {
                double s = 0.0;
                for (double p : grid.voxel(v))
                    s += p;
                worst = std::max(worst, std::abs(s - 1.0));
            }
        }
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-6 && elapsed < 30.0,
            "max |sum - 1| = " + fmt(worst) + " (<= 1e-6) over 20 scenes x 2 modes, " + fmt(elapsed) +
                " s (< 30 s)"};
}

Outcome culling_soundness() {
    const auto start = Clock::now();
    const VoxelGridSpec spec = testing::small_grid();
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const GaussianSet set = testing::random_set(500 + seed, 200, spec, 12);
        const SpatialIndex index = SpatialIndex::build(set, 3.0);
        for (auto mode : {AggregatorMode::Pgs, AggregatorMode::Dga}) {
            const auto culled = splat(set, spec, 12, mode, index);
            const auto full = splat_exhaustive(set, spec, 12, mode, 3.0);
            worst = std::max(worst, max_abs_diff(culled.data(), full.data()));
        }
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-6 && elapsed < 60.0,
            "max |culled - full| = " + fmt(worst) + " (<= 1e-6), " + fmt(elapsed) + " s (< 60 s)"};
}

Outcome opacity_invariance() {
    Rng rng(44);
    int identical = 0;
    for (int t = 0; t < 100; ++t) {
        const Instance in = random_instance(rng);
        GaussianSet reassigned;
        for (const auto& g : in.set)
            reassigned.push_back(g.with_opacity(rng.uniform(1e-3, 1.0)));
        identical += dga_semantics(in.x, in.ids, in.set) == dga_semantics(in.x, in.ids, reassigned);
    }

    constexpr double kStep = 1e-4;
    double min_slope = INFINITY;
    for (int t = 0; t < 100; ++t) {
        Instance in = random_instance(rng);
        for (std::size_t i = 0; i < in.set.size(); ++i) {
            const double a = in.set[i].opacity();
            const double hi = std::min(1.0, a + kStep);
            const double lo = hi - kStep;
            GaussianSet up = in.set;
            GaussianSet down = in.set;
            up[i] = in.set[i].with_opacity(hi);
            down[i] = in.set[i].with_opacity(lo);
            const double slope = (dga_occupancy(in.x, in.ids, up) - dga_occupancy(in.x, in.ids, down)) / kStep;
            min_slope = std::min(min_slope, slope);
        }
    }
    return {identical == 100 && min_slope >= -1e-8,
            std::to_string(identical) + "/100 semantics bit-identical; min occupancy FD slope " +
                fmt(min_slope) + " (>= -1e-8)"};
}

Outcome double_sum_equivalence() {
    Rng rng(55);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Instance in = random_instance(rng);
        worst = std::max(worst, max_abs_diff(dga_semantics(in.x, in.ids, in.set),
                                             double_sum_semantics(in.x, in.ids, in.set)));
    }
    return {worst <= 1e-9, "max deviation from the double-sum form " + fmt(worst) + " (<= 1e-9)"};
}

Outcome gca_correctness_and_complexity() {
    const auto start = Clock::now();
    Rng rng(66);
    double worst = 0.0;
    double worst_softmax = 0.0;
    int configs = 0;
    for (std::size_t g : {1u, 2u, 4u, 8u})
        for (std::size_t l : {1u, 2u, 4u})
            for (int rep = 0; rep < 9 && configs < 100; ++rep) {
                const std::size_t d = g * (1 + static_cast<std::size_t>(rng.uniform() * 4));
                const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 150);
                const auto seed = static_cast<std::uint64_t>(rng.uniform() * 1e9);
                const auto feats = random_features(n, d, l, seed);
                const auto w = GcaWeights::random(d, g, seed + 1);
                const auto fast = gca_forward_with_attention(feats, w);
                const auto ref = gca_reference(feats, w);
                worst = std::max(worst, max_abs_diff(fast.features.data, ref.features.data));
                for (std::size_t row = 0; row < fast.attention.size() / l; ++row) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < l; ++k)
                        s += fast.attention[row * l + k];
                    worst_softmax = std::max(worst_softmax, std::abs(s - 1.0));
                }
                ++configs;
            }
    // Top up to exactly 100 configurations with mixed settings.
    while (configs < 100) {
        const std::size_t g = std::size_t{1} << static_cast<int>(rng.uniform() * 4);
        const std::size_t l = std::size_t{1} << static_cast<int>(rng.uniform() * 3);
        const auto feats = random_features(40, 2 * g, l, 9000 + configs);
        const auto w = GcaWeights::random(2 * g, g, 9100 + configs);
        worst = std::max(worst, max_abs_diff(gca_forward(feats, w).data, gca_reference(feats, w).features.data));
        ++configs;
    }

    std::vector<std::size_t> sizes;
    for (std::size_t n = 1024; n <= 65536; n *= 2)
        sizes.push_back(n);
    const ComplexityReport rep = complexity_bench(sizes, 96, 4, 4, 3, BenchKernel::Gca, 1);
    const double elapsed = seconds_since(start);
    const bool pass = worst <= 1e-6 && worst_softmax <= 1e-6 && rep.slope >= 0.8 && rep.slope <= 1.2 &&
                      elapsed < 120.0;
    return {pass, std::to_string(configs) + " configs max |fast - reference| " + fmt(worst) +
                      " (<= 1e-6), softmax error " + fmt(worst_softmax) + ", log-log slope " + fmt(rep.slope) +
                      " (in [0.8, 1.2]), " + fmt(elapsed) + " s (< 120 s)"};
}

Outcome prob_scale_weighting() {
    const double ell = 0.7318;
    const double four = prob_scale_loss_from_layers(std::vector<double>(4, ell));
    const double err = std::abs(four - 1.75 * ell);

    Rng rng(77);
    LayerOccupancies one;
    one.layers.emplace_back();
    for (int i = 0; i < 500; ++i) {
        one.layers[0].push_back(rng.uniform(0.01, 0.99));
        one.gt.push_back(rng.uniform() < 0.3 ? 1 : 0);
    }
    const double single = prob_scale_loss(one);
    const double geo = scal_geo_loss(one.layers[0], one.gt).loss;
    return {err <= 1e-12 && single == geo,
            "n=4 equal layers: |L - 1.75 l| = " + fmt(err) + " (<= 1e-12); n=1: " + fmt(single) +
                (single == geo ? " == " : " != ") + fmt(geo)};
}

Outcome initialization_constants() {
    ScratchDir dir("init");
    const DepthMap depth{640, 480, std::vector<double>(640 * 480, 2.0)};
    write_grid_file(dir.file("depth.sscg"), to_grid_file(depth));
    const CliRun r = cli({"init-from-depth", "--depth", dir.file("depth.sscg"), "--intrinsics",
                          "500,500,319.5,239.5", "--grid", "30x40", "--out", dir.file("scene.json")});
    if (r.code != 0)
        return {false, "init-from-depth failed: " + r.err};
    const Scene scene = read_scene(dir.file("scene.json"));
    double lo = INFINITY;
    double hi = -INFINITY;
    for (const auto& g : scene.primitives) {
        lo = std::min(lo, g.scale().minCoeff());
        hi = std::max(hi, g.scale().maxCoeff());
    }
    return {scene.primitives.size() == 1200 && lo >= 0.01 && hi <= 0.16,
            std::to_string(scene.primitives.size()) + " primitives (== 1200), scales in [" + fmt(lo) + ", " +
                fmt(hi) + "] (within [0.01, 0.16])"};
}

LabelGrid fixture(const char* rows) {
    VoxelGridSpec spec;
    spec.dims = {4, 4, 1};
    LabelGrid g(spec);
    for (std::uint32_t i = 0; i < 4; ++i)
        for (std::uint32_t j = 0; j < 4; ++j)
            g.labels[spec.linear_index(i, j, 0)] = static_cast<std::uint8_t>(rows[i * 4 + j] - '0');
    return g;
}

Outcome metrics_sanity() {
    const LabelGrid gt = fixture("1100"
                                 "1102"
                                 "0022"
                                 "0022");
    const LabelGrid pred = fixture("1000"
                                   "1222"
                                   "0020"
                                   "0122");
    // Hand count: 7 voxels occupied in both, 11 in either; class 1 tp 2 fp 1 fn 2; class 2 tp 4 fp 2 fn 1.
    const IouResult r = iou_miou(pred, gt, 3);
    const bool iou_ok = r.iou == 7.0 / 11.0 && r.per_class.size() == 2 && r.per_class[0] == 2.0 / 5.0 &&
                        r.per_class[1] == 4.0 / 7.0 && r.miou == (2.0 / 5.0 + 4.0 / 7.0) / 2.0;

    Rng rng(99);
    std::vector<Vec3> pts;
    std::vector<double> depth;
    std::vector<double> scaled;
    for (int i = 0; i < 200; ++i) {
        pts.push_back(testing::random_point(rng, Vec3::Constant(-1.0), Vec3::Constant(1.0)));
        depth.push_back(rng.uniform(0.5, 6.0));
        scaled.push_back(1.3 * depth.back());
    }
    const DepthMetrics same = depth_metrics(pts, pts, depth, depth);
    const DepthMetrics off = depth_metrics(pts, pts, scaled, depth);
    const bool depth_ok = same.rmse == 0.0 && same.delta1 == 1.0 && same.chamfer_l1 == 0.0 && off.delta1 == 0.0;
    return {iou_ok && depth_ok,
            "fixture IoU " + fmt(r.iou) + " (7/11), class IoU " + fmt(r.per_class.at(0)) + ", " +
                fmt(r.per_class.at(1)) + " (2/5, 4/7); identical depth (" + fmt(same.rmse) + ", " +
                fmt(same.delta1) + ", " + fmt(same.chamfer_l1) + "); delta1 at 1.3x " + fmt(off.delta1)};
}

Outcome splat_efficiency() {
    ScratchDir dir("bench");
    const CliRun gen = cli({"generate-scene", "--kind", "random", "--count", "1200", "--seed", "10", "--out",
                            dir.file("scene.json")});
    if (gen.code != 0)
        return {false, "generate-scene failed: " + gen.err};
    const auto bench = [&](const char* threads) {
        return cli({"bench-splat", "--scene", dir.file("scene.json"), "--grid-dims", "60x60x36", "--repeat", "3",
                    "--threads", threads});
    };
    const CliRun one = bench("1");
    const CliRun eight = bench("8");
    if (one.code != 0 || eight.code != 0)
        return {false, "bench-splat failed: " + one.err + eight.err};
    const double t1 = field(one, "mean_ms");
    const double t8 = field(eight, "mean_ms");
    const double speedup = t1 / t8;
    const bool same = one.fields.at("checksum") == eight.fields.at("checksum") &&
                      one.fields.at("deterministic") == "true" && eight.fields.at("deterministic") == "true";
    const unsigned cores = std::thread::hardware_concurrency();
    return {t1 < 5000.0 && speedup >= 2.0 && same,
            "1 thread " + fmt(t1) + " ms (< 5000), 8 threads " + fmt(t8) + " ms, speedup " + fmt(speedup) +
                " (>= 2) on " + std::to_string(cores) + " hardware thread(s), output " +
                (same ? "bit-identical" : "DIFFERS")};
}

} // namespace
} // namespace splatvox

int main(int argc, char** argv) {
    using namespace splatvox;
    CLI::App app{"splatvox acceptance checks"};
    int only = 0;
    app.add_option("--criterion", only, "Run a single criterion (1-10); 0 runs all")->check(CLI::Range(0, 10));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome()>> criteria{
        floater_pathology,   normalization,          culling_soundness,
        opacity_invariance,  double_sum_equivalence, gca_correctness_and_complexity,
        prob_scale_weighting, initialization_constants, metrics_sanity,
        splat_efficiency};

    bool all_pass = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (only != 0 && id != only)
            continue;
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        all_pass &= o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << std::endl;
    }
    return all_pass ? 0 : 1;
}

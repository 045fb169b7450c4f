// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/cli.hpp"

#include "splatvox/aggregators.hpp"
#include "splatvox/depth_init.hpp"
#include "splatvox/error.hpp"
#include "splatvox/gmf_attention.hpp"
#include "splatvox/losses_metrics.hpp"
#include "splatvox/parallel.hpp"
#include "splatvox/scene_io.hpp"
#include "splatvox/scenes.hpp"
#include "splatvox/simd/kernels.hpp"
#include "splatvox/spatial_index.hpp"

#include "CLI11.hpp"

#include <sys/resource.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

namespace splatvox {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double parse_double(std::string_view text, std::string_view what) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw InvalidInput("malformed " + std::string(what) + " '" + std::string(text) + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw InvalidInput("malformed " + std::string(what) + " '" + std::string(text) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view text, std::string_view sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos)
            return parts;
        start = pos + sep.size();
    }
}

/// "a..b" doubles from a to b; otherwise a comma-separated list.
std::vector<std::size_t> parse_sizes(std::string_view text) {
    std::vector<std::size_t> sizes;
    if (const auto range = split(text, ".."); range.size() == 2) {
        const auto lo = parse_u64(range[0], "size range");
        const auto hi = parse_u64(range[1], "size range");
        if (lo == 0 || hi < lo)
            throw InvalidInput("size range must satisfy 0 < lo <= hi");
        for (std::uint64_t n = lo; n <= hi; n *= 2)
            sizes.push_back(n);
        return sizes;
    }
    for (auto part : split(text, ",")) {
        const auto n = parse_u64(part, "size");
        if (n == 0)
            throw InvalidInput("sizes must be positive");
        sizes.push_back(n);
    }
    return sizes;
}

void select_isa_flag(const std::string& isa) {
    if (isa == "auto")
        simd::select_isa(simd::detect_isa());
    else
        simd::select_isa(simd::parse_isa(isa));
}

void print(std::ostream& out, std::string_view key, double value) {
    out << key << '=' << format_number(value) << '\n';
}

template <typename Int>
    requires std::is_integral_v<Int>
void print(std::ostream& out, std::string_view key, Int value) {
    out << key << '=' << value << '\n';
}

void print(std::ostream& out, std::string_view key, std::string_view value) {
    out << key << '=' << value << '\n';
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, 16);
    return std::string(16 - (ptr - buf), '0') + std::string(buf, ptr);
}

std::uint64_t grid_checksum(const SemanticProbGrid& grid) {
    const auto& d = grid.data();
    return fnv1a({reinterpret_cast<const std::uint8_t*>(d.data()), d.size() * sizeof(double)});
}

long peak_rss_kib() {
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    return usage.ru_maxrss; // KiB on Linux
}

struct GridFlags {
    std::string dims = "60x60x36";
    double voxel_size = 0.08;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--grid-dims", dims, "Voxel counts XxYxZ")->capture_default_str();
        cmd->add_option("--voxel-size", voxel_size, "Voxel edge length in meters")
            ->capture_default_str();
    }
    VoxelGridSpec spec() const { return centered_grid(parse_dims3(dims), voxel_size); }
};

// --- commands -------------------------------------------------------------

struct SplatArgs {
    std::string scene;
    GridFlags grid;
    std::string mode = "pgs";
    double kappa = SpatialIndex::kDefaultKappa;
    std::string out;
    std::string labels_out;
    unsigned threads = 0;
    std::string isa = "auto";
};

void cmd_splat(const SplatArgs& a, std::ostream& out) {
    select_isa_flag(a.isa);
    const Scene scene = read_scene(a.scene);
    const VoxelGridSpec spec = a.grid.spec();
    const AggregatorMode mode = parse_mode(a.mode);

    const auto start = Clock::now();
    const SpatialIndex index = SpatialIndex::build(scene.primitives, a.kappa);
    const SemanticProbGrid probs = splat(scene.primitives, spec, scene.num_classes, mode, index,
                                         resolve_threads(a.threads));
    const double elapsed = seconds_since(start);
    const LabelGrid labels = argmax_labels(probs);

    const std::string labels_path = a.labels_out.empty() ? a.out + ".labels" : a.labels_out;
    write_grid_file(a.out, to_grid_file(probs));
    write_grid_file(labels_path, to_grid_file(labels));

    std::size_t occupied = 0;
    for (auto l : labels.labels)
        occupied += l != 0;
    print(out, "mode", mode_name(mode));
    print(out, "primitives", scene.primitives.size());
    print(out, "voxels", spec.voxel_count());
    print(out, "occupied_voxels", occupied);
    print(out, "probs_out", a.out);
    print(out, "labels_out", labels_path);
    print(out, "seconds", elapsed);
}

struct EvalArgs {
    std::string pred;
    std::string gt;
    std::string mask;
    std::size_t num_classes = 0;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
    const LabelGrid pred = labels_from_any(read_grid_file(a.pred));
    const LabelGrid gt = labels_from_any(read_grid_file(a.gt));
    if (!(pred.spec == gt.spec))
        throw InvalidInput("prediction and ground-truth grids have different geometry");

    std::vector<std::uint8_t> mask;
    if (!a.mask.empty()) {
        const LabelGrid m = label_grid_from(read_grid_file(a.mask));
        if (!(m.spec.dims == gt.spec.dims))
            throw InvalidInput("mask grid has different dims");
        mask = m.labels;
    }

    std::size_t classes = a.num_classes;
    if (classes == 0) {
        std::uint8_t top = 1;
        for (auto l : pred.labels)
            top = std::max(top, l);
        for (auto l : gt.labels)
            top = std::max(top, l);
        classes = std::size_t{top} + 1;
    }

    const IouResult r = iou_miou(pred, gt, classes, mask);
    print(out, "iou", r.iou);
    print(out, "miou", r.miou);
    for (std::size_t c = 0; c < r.per_class.size(); ++c)
        print(out, "iou_class_" + std::to_string(c + 1), r.per_class[c]);
    print(out, "num_classes", classes);
    print(out, "evaluated_voxels", r.evaluated_voxels);
}

struct InitArgs {
    std::string depth;
    std::string intrinsics;
    std::string grid = "30x40";
    std::string scale_range = "0.01:0.16";
    std::uint64_t seed = 0;
    std::string out;
    std::size_t num_classes = 12;
    GridFlags bounds;
};

void cmd_init_from_depth(const InitArgs& a, std::ostream& out) {
    const DepthMap depth = depth_map_from(read_grid_file(a.depth));

    const auto k_parts = split(a.intrinsics, ",");
    if (k_parts.size() != 4)
        throw InvalidInput("--intrinsics expects fx,fy,cx,cy");
    CameraIntrinsics k;
    k.fx = parse_double(k_parts[0], "fx");
    k.fy = parse_double(k_parts[1], "fy");
    k.cx = parse_double(k_parts[2], "cx");
    k.cy = parse_double(k_parts[3], "cy");
    k.width = depth.width;
    k.height = depth.height;

    const auto g_parts = split(a.grid, "x");
    if (g_parts.size() != 2)
        throw InvalidInput("--grid expects ROWSxCOLS");
    const auto rows = parse_u64(g_parts[0], "grid rows");
    const auto cols = parse_u64(g_parts[1], "grid cols");
    if (rows == 0 || cols == 0 || rows > 1u << 16 || cols > 1u << 16)
        throw InvalidInput("--grid dims must lie in [1, 65536]");

    const auto s_parts = split(a.scale_range, ":");
    if (s_parts.size() != 2)
        throw InvalidInput("--scale-range expects MIN:MAX");
    const ScaleRange range{parse_double(s_parts[0], "scale min"),
                           parse_double(s_parts[1], "scale max")};

    const auto ref = make_reference_grid(static_cast<std::uint32_t>(rows),
                                         static_cast<std::uint32_t>(cols));
    std::vector<Vec3> points;
    std::size_t invalid = 0;
    for (const auto& p : backproject(depth, k, ref)) {
        if (p.valid)
            points.push_back(camera_to_grid_frame(p.position));
        else
            ++invalid;
    }

    Scene scene;
    scene.num_classes = a.num_classes;
    scene.primitives = init_gaussians(points, a.bounds.spec(), a.num_classes, range, a.seed);
    write_scene(a.out, scene);

    print(out, "reference_points", ref.points.size());
    print(out, "invalid_depth", invalid);
    print(out, "outside_grid", points.size() - scene.primitives.size());
    print(out, "primitives", scene.primitives.size());
    print(out, "out", a.out);
}

void cmd_demo_floater(double opacity, int cluster, std::ostream& out) {
    const auto start = Clock::now();
    const FloaterReport r = floater_experiment(cluster, opacity);
    const double elapsed = seconds_since(start);
    print(out, "cluster_size", r.cluster_size);
    print(out, "outlier_opacity", r.outlier_opacity);
    print(out, "outlier_class", r.outlier_class);
    print(out, "neighbor_count", r.neighbor_count);
    print(out, "pgs_occupancy", r.pgs_occupancy);
    print(out, "dga_occupancy", r.dga_occupancy);
    print(out, "pgs_posterior", r.pgs_posterior);
    print(out, "pgs_label_prob", r.pgs_label_prob);
    print(out, "dga_occupied_prob", r.dga_occupied_prob);
    print(out, "seconds", elapsed);
}

struct GcaBenchArgs {
    std::string n = "1024..65536";
    std::size_t d = 96;
    std::size_t l = 4;
    std::size_t g = 4;
    int repeat = 3;
    bool dense = false;
    std::uint64_t seed = 1;
    std::string isa = "auto";
};

void cmd_gca_bench(const GcaBenchArgs& a, std::ostream& out) {
    select_isa_flag(a.isa);
    const auto sizes = parse_sizes(a.n);
    const ComplexityReport rep =
        complexity_bench(sizes, a.d, a.l, a.g, a.repeat,
                         a.dense ? BenchKernel::Dense : BenchKernel::Gca, a.seed);
    print(out, "kernel", a.dense ? "dense" : "gca");
    print(out, "isa", simd::isa_name(simd::active_kernels().isa));
    for (const auto& row : rep.rows)
        out << "n=" << row.points << " seconds=" << format_number(row.seconds) << '\n';
    print(out, "slope", rep.slope);
}

struct BenchSplatArgs {
    std::string scene;
    GridFlags grid;
    std::string mode = "dga";
    double kappa = SpatialIndex::kDefaultKappa;
    int repeat = 5;
    unsigned threads = 1;
    std::string isa = "auto";
};

void cmd_bench_splat(const BenchSplatArgs& a, std::ostream& out) {
    if (a.repeat < 1)
        throw InvalidInput("--repeat must be at least 1");
    select_isa_flag(a.isa);
    const Scene scene = read_scene(a.scene);
    const VoxelGridSpec spec = a.grid.spec();
    const AggregatorMode mode = parse_mode(a.mode);
    const unsigned threads = resolve_threads(a.threads);

    std::vector<double> times;
    std::optional<std::uint64_t> checksum;
    bool deterministic = true;
    // Run 0 is an untimed warm-up (page faults, thread start-up); its output
    // still takes part in the determinism check.
    for (int r = 0; r <= a.repeat; ++r) {
        const auto start = Clock::now();
        const SpatialIndex index = SpatialIndex::build(scene.primitives, a.kappa);
        const SemanticProbGrid probs =
            splat(scene.primitives, spec, scene.num_classes, mode, index, threads);
        if (r > 0)
            times.push_back(seconds_since(start));
        const auto sum = grid_checksum(probs);
        if (checksum && *checksum != sum)
            deterministic = false;
        checksum = sum;
    }

    double mean = 0.0;
    for (double t : times)
        mean += t;
    mean /= static_cast<double>(times.size());
    double var = 0.0;
    for (double t : times)
        var += (t - mean) * (t - mean);
    const double stdev = times.size() > 1 ? std::sqrt(var / static_cast<double>(times.size() - 1)) : 0.0;

    print(out, "mode", mode_name(mode));
    print(out, "isa", simd::isa_name(simd::active_kernels().isa));
    print(out, "threads", threads);
    print(out, "primitives", scene.primitives.size());
    print(out, "voxels", spec.voxel_count());
    print(out, "repeat", a.repeat);
    print(out, "mean_ms", mean * 1e3);
    print(out, "stdev_ms", stdev * 1e3);
    print(out, "peak_rss_kib", peak_rss_kib());
    print(out, "checksum", hex64(*checksum));
    print(out, "deterministic", deterministic ? "true" : "false");
}

struct GenerateArgs {
    std::string kind = "random";
    std::uint64_t seed = 0;
    std::string out;
    SceneParams params;
};

void cmd_generate_scene(const GenerateArgs& a, std::ostream& out) {
    const Scene scene = generate_scene(parse_scene_kind(a.kind), a.params, a.seed);
    write_scene(a.out, scene);
    print(out, "kind", a.kind);
    print(out, "primitives", scene.primitives.size());
    print(out, "num_classes", scene.num_classes);
    print(out, "out", a.out);
}

} // namespace

std::string format_number(double value) {
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    std::string s(buf, ptr);
    if (s.find_first_of(".eE") == std::string::npos)
        s += ".0";
    return s;
}

std::array<std::uint32_t, 3> parse_dims3(std::string_view text) {
    const auto parts = split(text, "x");
    if (parts.size() != 3)
        throw InvalidInput("grid dims must look like XxYxZ, got '" + std::string(text) + "'");
    std::array<std::uint32_t, 3> dims{};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto v = parse_u64(parts[i], "grid dim");
        if (v == 0 || v > 4096)
            throw InvalidInput("grid dims must lie in [1, 4096]");
        dims[i] = static_cast<std::uint32_t>(v);
    }
    return dims;
}

VoxelGridSpec centered_grid(std::array<std::uint32_t, 3> dims, double voxel_size) {
    VoxelGridSpec spec;
    spec.dims = dims;
    spec.voxel_size = voxel_size;
    spec.origin = Vec3(-0.5 * dims[0] * voxel_size, 0.0, -0.5 * dims[2] * voxel_size);
    spec.validate();
    return spec;
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gaussian-to-voxel splatting toolkit", "splatvox"};
    app.require_subcommand(1);
    const std::vector<std::string> modes{"pgs", "dga"};
    const std::vector<std::string> isas{"auto", "scalar", "avx2"};

    SplatArgs splat_args;
    auto* splat_cmd = app.add_subcommand("splat", "Splat a scene file into probability and label grids");
    splat_cmd->add_option("--scene", splat_args.scene, "Scene file")->required();
    splat_args.grid.add_to(splat_cmd);
    splat_cmd->add_option("--mode", splat_args.mode, "Aggregator")->check(CLI::IsMember(modes))->capture_default_str();
    splat_cmd->add_option("--kappa", splat_args.kappa, "Neighborhood radius in standard deviations")->capture_default_str();
    splat_cmd->add_option("--out", splat_args.out, "Probability grid output")->required();
    splat_cmd->add_option("--labels-out", splat_args.labels_out, "Label grid output (default: <out>.labels)");
    splat_cmd->add_option("--threads", splat_args.threads, "Worker threads (0 = auto)")->capture_default_str();
    splat_cmd->add_option("--isa", splat_args.isa, "Kernel set")->check(CLI::IsMember(isas))->capture_default_str();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "IoU / mIoU of a predicted grid against ground truth");
    eval_cmd->add_option("--pred", eval_args.pred, "Predicted label or probability grid")->required();
    eval_cmd->add_option("--gt", eval_args.gt, "Ground-truth label grid")->required();
    eval_cmd->add_option("--mask", eval_args.mask, "Label grid; nonzero voxels are evaluated");
    eval_cmd->add_option("--num-classes", eval_args.num_classes, "Class count (0 = infer from labels)");

    InitArgs init_args;
    auto* init_cmd = app.add_subcommand("init-from-depth", "Lift a depth map into initial primitives");
    init_cmd->add_option("--depth", init_args.depth, "Depth grid file")->required();
    init_cmd->add_option("--intrinsics", init_args.intrinsics, "fx,fy,cx,cy")->required();
    init_cmd->add_option("--grid", init_args.grid, "Reference points ROWSxCOLS")->capture_default_str();
    init_cmd->add_option("--scale-range", init_args.scale_range, "MIN:MAX initial scale")->capture_default_str();
    init_cmd->add_option("--seed", init_args.seed, "Random seed")->capture_default_str();
    init_cmd->add_option("--num-classes", init_args.num_classes, "Class count")->capture_default_str();
    init_cmd->add_option("--out", init_args.out, "Scene file output")->required();
    init_args.bounds.add_to(init_cmd);

    double floater_opacity = 0.01;
    int floater_cluster = 50;
    auto* floater_cmd = app.add_subcommand("demo-floater", "Isolated low-opacity outlier next to a dense cluster");
    floater_cmd->add_option("--opacity", floater_opacity, "Outlier opacity")->capture_default_str();
    floater_cmd->add_option("--cluster", floater_cluster, "Cluster size")->capture_default_str();

    GcaBenchArgs gca_args;
    auto* gca_cmd = app.add_subcommand("gca-bench", "Time the attention kernel against the point count");
    gca_cmd->add_option("--n", gca_args.n, "Point counts: LO..HI (doubling) or a,b,c")->capture_default_str();
    gca_cmd->add_option("--d", gca_args.d, "Feature width")->capture_default_str();
    gca_cmd->add_option("--l", gca_args.l, "Image scales")->capture_default_str();
    gca_cmd->add_option("--g", gca_args.g, "Channel groups")->capture_default_str();
    gca_cmd->add_option("--repeat", gca_args.repeat, "Timing repeats (best is kept)")->capture_default_str();
    gca_cmd->add_option("--seed", gca_args.seed, "Random seed")->capture_default_str();
    gca_cmd->add_flag("--dense", gca_args.dense, "Time dense cross-attention instead");
    gca_cmd->add_option("--isa", gca_args.isa, "Kernel set")->check(CLI::IsMember(isas))->capture_default_str();

    BenchSplatArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench-splat", "Splat latency and peak memory");
    bench_cmd->add_option("--scene", bench_args.scene, "Scene file")->required();
    bench_args.grid.add_to(bench_cmd);
    bench_cmd->add_option("--mode", bench_args.mode, "Aggregator")->check(CLI::IsMember(modes))->capture_default_str();
    bench_cmd->add_option("--kappa", bench_args.kappa, "Neighborhood radius")->capture_default_str();
    bench_cmd->add_option("--repeat", bench_args.repeat, "Timed runs")->capture_default_str();
    bench_cmd->add_option("--threads", bench_args.threads, "Worker threads (0 = auto)")->capture_default_str();
    bench_cmd->add_option("--isa", bench_args.isa, "Kernel set")->check(CLI::IsMember(isas))->capture_default_str();

    GenerateArgs gen_args;
    auto* gen_cmd = app.add_subcommand("generate-scene", "Write a synthetic scene file");
    gen_cmd->add_option("--kind", gen_args.kind, "random | cluster_plus_outlier | planar_room")->capture_default_str();
    gen_cmd->add_option("--seed", gen_args.seed, "Random seed")->capture_default_str();
    gen_cmd->add_option("--count", gen_args.params.count, "Primitive count (random)")->capture_default_str();
    gen_cmd->add_option("--num-classes", gen_args.params.num_classes, "Class count")->capture_default_str();
    gen_cmd->add_option("--cluster", gen_args.params.cluster_size, "Cluster size (cluster_plus_outlier)")->capture_default_str();
    gen_cmd->add_option("--opacity", gen_args.params.outlier_opacity, "Outlier opacity (cluster_plus_outlier)")->capture_default_str();
    gen_cmd->add_option("--out", gen_args.out, "Scene file output")->required();
    GridFlags gen_bounds;
    gen_bounds.add_to(gen_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*splat_cmd)
            cmd_splat(splat_args, out);
        else if (*eval_cmd)
            cmd_eval(eval_args, out);
        else if (*init_cmd)
            cmd_init_from_depth(init_args, out);
        else if (*floater_cmd)
            cmd_demo_floater(floater_opacity, floater_cluster, out);
        else if (*gca_cmd)
            cmd_gca_bench(gca_args, out);
        else if (*bench_cmd)
            cmd_bench_splat(bench_args, out);
        else if (*gen_cmd) {
            gen_args.params.bounds = gen_bounds.spec();
            cmd_generate_scene(gen_args, out);
        }
    } catch (const std::exception& e) {
        err << "splatvox: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace splatvox

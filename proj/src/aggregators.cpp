// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/aggregators.hpp"

#include "splatvox/error.hpp"
#include "splatvox/parallel.hpp"
#include "splatvox/scenes.hpp"
#include "splatvox/simd/kernels.hpp"

#include <cmath>
#include <string>

namespace splatvox {

namespace {

constexpr double kLogSpaceFactor = 1e-12;

std::size_t semantic_width(std::span<const PrimitiveId> ids, const GaussianSet& set) {
    if (!ids.empty())
        return set.at(ids.front()).num_semantic();
    if (!set.empty())
        return set.front().num_semantic();
    throw InvalidInput("cannot infer the class count from an empty primitive set");
}

// Running state for 1 - prod(1 - v_i) that switches to log space once a
// factor drops below 1e-12.
class OrAccumulator {
public:
    void add(double v) {
        const double factor = 1.0 - v;
        product_ *= factor;
        log_sum_ += std::log1p(-v);
        if (factor < kLogSpaceFactor)
            use_log_ = true;
    }
    double value() const { return use_log_ ? -std::expm1(log_sum_) : 1.0 - product_; }

private:
    double product_ = 1.0;
    double log_sum_ = 0.0;
    bool use_log_ = false;
};

// Weighted mixture of semantic weight vectors with a uniform fallback.
class MixtureAccumulator {
public:
    explicit MixtureAccumulator(std::span<double> out) : out_(out) {
        std::fill(out_.begin(), out_.end(), 0.0);
    }
    void add(double weight, const std::vector<double>& sem) {
        for (std::size_t l = 0; l < out_.size(); ++l)
            out_[l] += weight * sem[l];
        total_ += weight;
    }
    // Normalizes in place; returns the denominator.
    double finish() {
        if (!(total_ >= kSemanticDenominatorFloor)) {
            std::fill(out_.begin(), out_.end(), 1.0 / static_cast<double>(out_.size()));
            return total_;
        }
        for (double& v : out_)
            v /= total_;
        return total_;
    }

private:
    std::span<double> out_;
    double total_ = 0.0;
};

void check_ids(std::span<const PrimitiveId> ids, const GaussianSet& set) {
    for (PrimitiveId id : ids)
        if (id >= set.size())
            throw InvalidInput("primitive id " + std::to_string(id) + " out of range");
}

// Packed SoA copies of the primitives a voxel may see.
struct PackedBlock {
    std::vector<double> mx, my, mz, i00, i01, i02, i11, i12, i22;
    std::vector<PrimitiveId> ids;

    void push(const GaussianPrimitive& g, PrimitiveId id) {
        const Mat3& m = g.inv_cov();
        mx.push_back(g.mean().x());
        my.push_back(g.mean().y());
        mz.push_back(g.mean().z());
        i00.push_back(m(0, 0));
        i01.push_back(m(0, 1));
        i02.push_back(m(0, 2));
        i11.push_back(m(1, 1));
        i12.push_back(m(1, 2));
        i22.push_back(m(2, 2));
        ids.push_back(id);
    }
    simd::GaussianLanes lanes() const {
        return {mx.data(),  my.data(),  mz.data(),  i00.data(), i01.data(),
                i02.data(), i11.data(), i12.data(), i22.data(), ids.size()};
    }
};

// Fused class distribution at one voxel from its candidate block.
void evaluate_voxel(const Vec3& x, const PackedBlock& block, const GaussianSet& set,
                    AggregatorMode mode, double kappa_sq, const simd::KernelTable& kernels,
                    std::vector<double>& quad, std::span<double> out) {
    const std::size_t n = block.ids.size();
    quad.resize(n);
    kernels.quadratic_forms(block.lanes(), x.x(), x.y(), x.z(), quad.data());

    OrAccumulator occupancy;
    MixtureAccumulator semantics(out.subspan(1));
    for (std::size_t j = 0; j < n; ++j) {
        if (!(quad[j] <= kappa_sq))
            continue;
        const GaussianPrimitive& g = set[block.ids[j]];
        const double kernel = std::exp(-0.5 * quad[j]);
        const double pdf = kernel * g.pdf_peak();
        if (mode == AggregatorMode::Dga) {
            occupancy.add(kernel * g.opacity());
            semantics.add(pdf, g.semantic_weights());
        } else {
            occupancy.add(kernel);
            semantics.add(pdf * g.opacity(), g.semantic_weights());
        }
    }
    semantics.finish();
    const double alpha = occupancy.value();
    out[0] = 1.0 - alpha;
    for (std::size_t l = 1; l < out.size(); ++l)
        out[l] *= alpha;
}

void check_splat_inputs(const GaussianSet& set, const VoxelGridSpec& spec,
                        std::size_t num_classes) {
    spec.validate();
    if (num_classes < 2)
        throw InvalidInput("num_classes must be at least 2");
    for (const auto& g : set)
        if (g.num_semantic() + 1 != num_classes)
            throw InvalidInput("primitive semantic length does not match num_classes - 1");
}

void fill_empty(SemanticProbGrid& grid) {
    for (std::size_t v = 0; v < grid.voxel_count(); ++v)
        grid.voxel(v)[0] = 1.0;
}

} // namespace

std::string_view mode_name(AggregatorMode mode) {
    return mode == AggregatorMode::Pgs ? "pgs" : "dga";
}

AggregatorMode parse_mode(std::string_view name) {
    if (name == "pgs")
        return AggregatorMode::Pgs;
    if (name == "dga")
        return AggregatorMode::Dga;
    throw InvalidInput("unknown aggregator mode '" + std::string(name) + "'");
}

double probabilistic_or(std::span<const double> values) {
    OrAccumulator acc;
    for (double v : values)
        acc.add(v);
    return acc.value();
}

double pgs_occupancy(const Vec3& x, std::span<const PrimitiveId> ids, const GaussianSet& set) {
    check_ids(ids, set);
    OrAccumulator acc;
    for (PrimitiveId id : ids)
        acc.add(gaussian_kernel(x, set[id]));
    return acc.value();
}

double dga_occupancy(const Vec3& x, std::span<const PrimitiveId> ids, const GaussianSet& set) {
    check_ids(ids, set);
    OrAccumulator acc;
    for (PrimitiveId id : ids)
        acc.add(gaussian_kernel(x, set[id]) * set[id].opacity());
    return acc.value();
}

std::vector<double> pgs_semantics(const Vec3& x, std::span<const PrimitiveId> ids,
                                  const GaussianSet& set) {
    check_ids(ids, set);
    std::vector<double> out(semantic_width(ids, set));
    MixtureAccumulator acc(out);
    for (PrimitiveId id : ids)
        acc.add(gaussian_pdf(x, set[id]) * set[id].opacity(), set[id].semantic_weights());
    acc.finish();
    return out;
}

std::vector<double> dga_semantics(const Vec3& x, std::span<const PrimitiveId> ids,
                                  const GaussianSet& set) {
    check_ids(ids, set);
    std::vector<double> out(semantic_width(ids, set));
    MixtureAccumulator acc(out);
    for (PrimitiveId id : ids)
        acc.add(gaussian_pdf(x, set[id]), set[id].semantic_weights());
    acc.finish();
    return out;
}

std::vector<double> fuse(double alpha, std::span<const double> sem) {
    std::vector<double> out(sem.size() + 1);
    out[0] = 1.0 - alpha;
    for (std::size_t l = 0; l < sem.size(); ++l)
        out[l + 1] = alpha * sem[l];
    return out;
}

std::vector<PrimitiveId> thresholded_neighbors(const Vec3& x,
                                               std::span<const PrimitiveId> candidates,
                                               const GaussianSet& set, double kappa) {
    check_ids(candidates, set);
    std::vector<PrimitiveId> out;
    const double kappa_sq = kappa * kappa;
    for (PrimitiveId id : candidates)
        if (set[id].mahalanobis_sq(x) <= kappa_sq)
            out.push_back(id);
    return out;
}

SemanticProbGrid splat(const GaussianSet& set, const VoxelGridSpec& spec, std::size_t num_classes,
                       AggregatorMode mode, const SpatialIndex& index, unsigned threads) {
    check_splat_inputs(set, spec, num_classes);
    if (!index.matches(set))
        throw InvalidInput("spatial index was not built over this primitive set");

    SemanticProbGrid grid(spec, num_classes);
    if (set.empty()) {
        fill_empty(grid);
        return grid;
    }

    std::vector<PackedBlock> blocks(index.cell_count());
    for (std::size_t slot = 0; slot < blocks.size(); ++slot)
        for (PrimitiveId id : index.cell_members(slot))
            blocks[slot].push(set[id], id);

    const double kappa_sq = index.kappa() * index.kappa();
    const simd::KernelTable& kernels = simd::active_kernels();
    const PackedBlock empty_block;

    parallel_for_chunks(grid.voxel_count(), resolve_threads(threads),
                        [&](std::size_t begin, std::size_t end) {
                            std::vector<double> quad;
                            for (std::size_t v = begin; v < end; ++v) {
                                const Vec3 x = spec.voxel_center(v);
                                const auto slot = index.find_cell(index.cell_of(x));
                                const PackedBlock& block = slot ? blocks[*slot] : empty_block;
                                evaluate_voxel(x, block, set, mode, kappa_sq, kernels, quad,
                                               grid.voxel(v));
                            }
                        });
    return grid;
}

SemanticProbGrid splat_exhaustive(const GaussianSet& set, const VoxelGridSpec& spec,
                                  std::size_t num_classes, AggregatorMode mode, double kappa,
                                  unsigned threads) {
    check_splat_inputs(set, spec, num_classes);
    if (!(kappa > 0.0))
        throw InvalidInput("kappa must be positive");

    SemanticProbGrid grid(spec, num_classes);
    PackedBlock all;
    for (PrimitiveId id = 0; id < set.size(); ++id)
        all.push(set[id], id);

    const double kappa_sq = kappa * kappa;
    const simd::KernelTable& kernels = simd::active_kernels();
    parallel_for_chunks(grid.voxel_count(), resolve_threads(threads),
                        [&](std::size_t begin, std::size_t end) {
                            std::vector<double> quad;
                            for (std::size_t v = begin; v < end; ++v)
                                evaluate_voxel(spec.voxel_center(v), all, set, mode, kappa_sq,
                                               kernels, quad, grid.voxel(v));
                        });
    return grid;
}

FloaterReport floater_experiment(int cluster_size, double outlier_opacity) {
    constexpr std::size_t kNumClasses = 12;
    constexpr std::uint64_t kSeed = 7;
    const Scene scene = cluster_plus_outlier(cluster_size, outlier_opacity, kNumClasses, kSeed);
    const GaussianSet& set = scene.primitives;
    const Vec3 probe = set.back().mean();

    const SpatialIndex index = SpatialIndex::build(set, SpatialIndex::kDefaultKappa);
    const auto ids = thresholded_neighbors(probe, index.neighbors(probe), set, index.kappa());

    FloaterReport report;
    report.cluster_size = static_cast<std::size_t>(cluster_size);
    report.outlier_opacity = outlier_opacity;
    report.outlier_class = kOutlierClass;
    report.neighbor_count = ids.size();
    report.pgs_occupancy = pgs_occupancy(probe, ids, set);
    report.dga_occupancy = dga_occupancy(probe, ids, set);

    const auto pgs_sem = pgs_semantics(probe, ids, set);
    const auto dga_sem = dga_semantics(probe, ids, set);
    report.pgs_posterior = pgs_sem[kOutlierClass - 1];
    report.pgs_label_prob = fuse(report.pgs_occupancy, pgs_sem)[kOutlierClass];
    report.dga_occupied_prob = fuse(report.dga_occupancy, dga_sem)[kOutlierClass];
    return report;
}

} // namespace splatvox

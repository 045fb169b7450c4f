// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatvox/gaussian.hpp"
#include "splatvox/grid.hpp"
#include "splatvox/spatial_index.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace splatvox {

enum class AggregatorMode {
    Pgs, ///< probabilistic superposition baseline: opacity as mixture prior
    Dga, ///< decoupled: opacity gates occupancy, semantics ignore it
};

std::string_view mode_name(AggregatorMode mode);
AggregatorMode parse_mode(std::string_view name); // "pgs" | "dga"

/// Semantic denominators below this fall back to the uniform distribution.
inline constexpr double kSemanticDenominatorFloor = 1e-30;

// Point-wise aggregators. `ids` is the neighborhood to aggregate over and is
// used as given, in order.

/// 1 - prod(1 - alpha(x; G_i)). Opacity is not used. 0 for an empty list.
double pgs_occupancy(const Vec3& x, std::span<const PrimitiveId> ids, const GaussianSet& set);

/// Posterior-weighted semantics with opacities as priors:
/// sum p(x|G_i) a_i c_i / sum p(x|G_j) a_j. Length C - 1.
std::vector<double> pgs_semantics(const Vec3& x, std::span<const PrimitiveId> ids,
                                  const GaussianSet& set);

/// 1 - prod(1 - alpha(x; G_i) a_i). 0 for an empty list.
double dga_occupancy(const Vec3& x, std::span<const PrimitiveId> ids, const GaussianSet& set);

/// sum p(x|G_i) c_i / sum p(x|G_j). Independent of every opacity.
std::vector<double> dga_semantics(const Vec3& x, std::span<const PrimitiveId> ids,
                                  const GaussianSet& set);

/// Occupancy-gated class distribution of length C = sem.size() + 1:
/// out[0] = 1 - alpha, out[l] = alpha * sem[l - 1].
std::vector<double> fuse(double alpha, std::span<const double> sem);

/// Product 1 - prod(1 - v_i) in the given order. Switches to a log-space sum
/// when any factor drops below 1e-12.
double probabilistic_or(std::span<const double> values);

/// The neighborhood N(x): candidates whose kernel value at x is at least
/// exp(-kappa^2 / 2), i.e. whose squared Mahalanobis distance is <= kappa^2.
/// Candidate order is preserved.
std::vector<PrimitiveId> thresholded_neighbors(const Vec3& x,
                                               std::span<const PrimitiveId> candidates,
                                               const GaussianSet& set, double kappa);

/// Evaluates the chosen aggregator at every voxel center over the thresholded
/// neighborhood found through `index`, fusing occupancy and semantics into a
/// C-class grid. Output does not depend on the thread count (0 = auto).
/// Throws InvalidInput when the index was not built over `set`, when
/// num_classes is inconsistent with the primitives, or when the spec is invalid.
SemanticProbGrid splat(const GaussianSet& set, const VoxelGridSpec& spec, std::size_t num_classes,
                       AggregatorMode mode, const SpatialIndex& index, unsigned threads = 0);

/// Same result as splat() but every voxel scans all primitives for the
/// thresholded neighborhood. Reference for culling checks.
SemanticProbGrid splat_exhaustive(const GaussianSet& set, const VoxelGridSpec& spec,
                                  std::size_t num_classes, AggregatorMode mode, double kappa,
                                  unsigned threads = 0);

struct FloaterReport {
    std::size_t cluster_size = 0;
    double outlier_opacity = 0.0;
    int outlier_class = 0;           ///< label in 1..C-1
    std::size_t neighbor_count = 0;  ///< |N(x^f)|
    double pgs_occupancy = 0.0;
    double dga_occupancy = 0.0;
    double pgs_posterior = 0.0;      ///< PGS semantic mass on the outlier class
    double pgs_label_prob = 0.0;     ///< PGS fused probability of that class
    double dga_occupied_prob = 0.0;  ///< DGA fused probability of that class
};

/// Dense high-opacity cluster plus one isolated low-confidence primitive of a
/// different class, evaluated at the outlier's mean with kappa = 3.
/// Throws InvalidInput unless cluster_size >= 1 and outlier_opacity in (0, 1].
FloaterReport floater_experiment(int cluster_size, double outlier_opacity);

} // namespace splatvox

// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatvox/gaussian.hpp"
#include "splatvox/grid.hpp"

#include <cstdint>
#include <string_view>

namespace splatvox {

/// A primitive set together with its class count C (empty class included).
struct Scene {
    std::size_t num_classes = 12;
    GaussianSet primitives;
};

enum class SceneKind { Random, ClusterPlusOutlier, PlanarRoom };

SceneKind parse_scene_kind(std::string_view name); // random | cluster_plus_outlier | planar_room
std::string_view scene_kind_name(SceneKind kind);

struct SceneParams {
    std::size_t num_classes = 12;

    // random
    std::size_t count = 100;
    VoxelGridSpec bounds = VoxelGridSpec::occ_scannet(); ///< means drawn inside its extent
    double min_scale = 0.02;
    double max_scale = 0.2;
    double logit_sigma = 2.0;

    // cluster_plus_outlier
    int cluster_size = 50;
    double outlier_opacity = 0.01;

    // planar_room
    double plane_spacing = 0.16;
};

/// Deterministic under `seed`. Throws InvalidInput on invalid parameters.
Scene generate_scene(SceneKind kind, const SceneParams& params, std::uint64_t seed);

/// Random means inside the bounds, uniform per-axis scales in
/// [min_scale, max_scale], random rotations, opacities in [0.05, 1] and
/// normal logits.
Scene random_scene(const SceneParams& params, std::uint64_t seed);

/// Primitives [0, cluster_size) form a tight high-opacity cluster of class 1;
/// the last primitive is the isolated outlier of class kOutlierClass placed
/// kOutlierDistance from the cluster centroid.
Scene cluster_plus_outlier(int cluster_size, double outlier_opacity, std::size_t num_classes,
                           std::uint64_t seed);

inline constexpr int kClusterClass = 1;
inline constexpr int kOutlierClass = 5;
inline constexpr double kClusterMaxScale = 0.08;
inline constexpr double kOutlierDistance = 2.0;

/// Flattened primitives tiling the floor (class 2) and two walls (class 3)
/// of the bounds.
Scene planar_room(const VoxelGridSpec& bounds, double spacing, std::size_t num_classes,
                  std::uint64_t seed);

} // namespace splatvox

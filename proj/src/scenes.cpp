// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/scenes.hpp"

#include "splatvox/error.hpp"
#include "splatvox/rng.hpp"

#include <cmath>
#include <string>

namespace splatvox {

namespace {

constexpr double kPeakLogit = 10.0;

Quat random_rotation(Rng& rng) {
    Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    double n = std::sqrt(q.squared_norm());
    if (n < 1e-12)
        return Quat::identity();
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

std::vector<double> one_hot_logits(std::size_t num_classes, int label) {
    std::vector<double> logits(num_classes - 1, 0.0);
    logits[static_cast<std::size_t>(label - 1)] = kPeakLogit;
    return logits;
}

void check_classes(std::size_t num_classes, int needed_label) {
    if (num_classes < 2 || num_classes > 256)
        throw InvalidInput("num_classes must lie in [2, 256]");
    if (static_cast<std::size_t>(needed_label) >= num_classes)
        throw InvalidInput("scene kind needs class " + std::to_string(needed_label) +
                           " but num_classes = " + std::to_string(num_classes));
}

} // namespace

SceneKind parse_scene_kind(std::string_view name) {
    if (name == "random")
        return SceneKind::Random;
    if (name == "cluster_plus_outlier")
        return SceneKind::ClusterPlusOutlier;
    if (name == "planar_room")
        return SceneKind::PlanarRoom;
    throw InvalidInput("unknown scene kind '" + std::string(name) + "'");
}

std::string_view scene_kind_name(SceneKind kind) {
    switch (kind) {
    case SceneKind::Random:
        return "random";
    case SceneKind::ClusterPlusOutlier:
        return "cluster_plus_outlier";
    case SceneKind::PlanarRoom:
        return "planar_room";
    }
    return "unknown";
}

Scene generate_scene(SceneKind kind, const SceneParams& params, std::uint64_t seed) {
    switch (kind) {
    case SceneKind::Random:
        return random_scene(params, seed);
    case SceneKind::ClusterPlusOutlier:
        return cluster_plus_outlier(params.cluster_size, params.outlier_opacity,
                                    params.num_classes, seed);
    case SceneKind::PlanarRoom:
        return planar_room(params.bounds, params.plane_spacing, params.num_classes, seed);
    }
    throw InvalidInput("unknown scene kind");
}

Scene random_scene(const SceneParams& p, std::uint64_t seed) {
    check_classes(p.num_classes, 1);
    p.bounds.validate();
    if (!(p.min_scale > 0.0) || !(p.max_scale >= p.min_scale))
        throw InvalidInput("scale range must satisfy 0 < min <= max");

    Rng rng(seed);
    Scene scene;
    scene.num_classes = p.num_classes;
    scene.primitives.reserve(p.count);
    const Vec3 lo = p.bounds.origin;
    const Vec3 ext = p.bounds.extent();
    for (std::size_t i = 0; i < p.count; ++i) {
        const Vec3 mean(lo.x() + rng.uniform() * ext.x(), lo.y() + rng.uniform() * ext.y(),
                        lo.z() + rng.uniform() * ext.z());
        const Vec3 scale(rng.uniform(p.min_scale, p.max_scale), rng.uniform(p.min_scale, p.max_scale),
                         rng.uniform(p.min_scale, p.max_scale));
        const Quat rot = random_rotation(rng);
        const double opacity = rng.uniform(0.05, 1.0);
        std::vector<double> logits(p.num_classes - 1);
        for (double& v : logits)
            v = p.logit_sigma * rng.normal();
        scene.primitives.emplace_back(mean, scale, rot, opacity, std::move(logits));
    }
    return scene;
}

Scene cluster_plus_outlier(int cluster_size, double outlier_opacity, std::size_t num_classes,
                           std::uint64_t seed) {
    if (cluster_size < 1)
        throw InvalidInput("cluster size must be at least 1");
    if (!(outlier_opacity > 0.0 && outlier_opacity <= 1.0))
        throw InvalidInput("outlier opacity must lie in (0, 1]");
    check_classes(num_classes, kOutlierClass);

    constexpr double kClusterRadius = 0.15;
    Rng rng(seed);
    Scene scene;
    scene.num_classes = num_classes;
    for (int i = 0; i < cluster_size; ++i) {
        // Rejection-sample a point in the ball.
        Vec3 offset;
        do {
            offset = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        } while (offset.squaredNorm() > 1.0);
        const Vec3 scale(rng.uniform(0.04, kClusterMaxScale), rng.uniform(0.04, kClusterMaxScale),
                         rng.uniform(0.04, kClusterMaxScale));
        scene.primitives.emplace_back(kClusterRadius * offset, scale, random_rotation(rng),
                                      rng.uniform(0.8, 1.0), one_hot_logits(num_classes, kClusterClass));
    }
    Vec3 centroid = Vec3::Zero();
    for (const auto& g : scene.primitives)
        centroid += g.mean();
    centroid /= static_cast<double>(cluster_size);

    scene.primitives.emplace_back(centroid + Vec3(kOutlierDistance, 0.0, 0.0), Vec3::Constant(0.05),
                                  Quat::identity(), outlier_opacity,
                                  one_hot_logits(num_classes, kOutlierClass));
    return scene;
}

Scene planar_room(const VoxelGridSpec& bounds, double spacing, std::size_t num_classes,
                  std::uint64_t seed) {
    constexpr int kFloor = 2;
    constexpr int kWall = 3;
    check_classes(num_classes, kWall);
    bounds.validate();
    if (!(spacing > 0.0))
        throw InvalidInput("plane spacing must be positive");

    Rng rng(seed);
    Scene scene;
    scene.num_classes = num_classes;
    const Vec3 lo = bounds.origin;
    const Vec3 ext = bounds.extent();
    const double thin = 0.25 * spacing;
    const double half = 0.5 * spacing;
    auto jitter = [&] { return rng.uniform(-0.05, 0.05) * spacing; };

    const auto nx = static_cast<int>(std::floor(ext.x() / spacing));
    const auto ny = static_cast<int>(std::floor(ext.y() / spacing));
    const auto nz = static_cast<int>(std::floor(ext.z() / spacing));

    // Floor: z = lo.z + thin, spanning x and y.
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            scene.primitives.emplace_back(
                Vec3(lo.x() + (i + 0.5) * spacing + jitter(), lo.y() + (j + 0.5) * spacing + jitter(),
                     lo.z() + thin),
                Vec3(half, half, thin), Quat::identity(), 0.95, one_hot_logits(num_classes, kFloor));
    // Back wall: y = hi.y - thin.
    for (int i = 0; i < nx; ++i)
        for (int k = 0; k < nz; ++k)
            scene.primitives.emplace_back(
                Vec3(lo.x() + (i + 0.5) * spacing + jitter(), lo.y() + ext.y() - thin,
                     lo.z() + (k + 0.5) * spacing + jitter()),
                Vec3(half, thin, half), Quat::identity(), 0.95, one_hot_logits(num_classes, kWall));
    // Side wall: x = lo.x + thin.
    for (int j = 0; j < ny; ++j)
        for (int k = 0; k < nz; ++k)
            scene.primitives.emplace_back(
                Vec3(lo.x() + thin, lo.y() + (j + 0.5) * spacing + jitter(),
                     lo.z() + (k + 0.5) * spacing + jitter()),
                Vec3(thin, half, half), Quat::identity(), 0.95, one_hot_logits(num_classes, kWall));
    return scene;
}

} // namespace splatvox

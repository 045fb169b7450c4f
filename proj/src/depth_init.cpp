// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/depth_init.hpp"

#include "splatvox/error.hpp"
#include "splatvox/rng.hpp"

#include <algorithm>
#include <cmath>

namespace splatvox {

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
        throw InvalidInput("focal lengths must be positive");
    if (width == 0 || height == 0)
        throw InvalidInput("image size must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
        throw InvalidInput("principal point must lie inside the image");
}

ReferenceGrid make_reference_grid(std::uint32_t rows, std::uint32_t cols) {
    if (rows == 0 || cols == 0)
        throw InvalidInput("reference grid dims must be at least 1");
    ReferenceGrid grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.points.reserve(std::size_t{rows} * cols);
    for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j)
            grid.points.push_back({(j + 0.5) / cols, (i + 0.5) / rows});
    return grid;
}

std::vector<BackprojectedPoint> backproject(const DepthMap& depth, const CameraIntrinsics& k,
                                            const ReferenceGrid& pts) {
    k.validate();
    if (depth.width != k.width || depth.height != k.height ||
        depth.depth.size() != std::size_t{depth.width} * depth.height)
        throw InvalidInput("depth map size does not match the intrinsics");

    std::vector<BackprojectedPoint> out;
    out.reserve(pts.points.size());
    for (const auto& [u, v] : pts.points) {
        BackprojectedPoint p;
        if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
            out.push_back(p);
            continue;
        }
        const auto px = static_cast<std::uint32_t>(std::lround(u * (k.width - 1)));
        const auto py = static_cast<std::uint32_t>(std::lround(v * (k.height - 1)));
        const double d = depth.at(px, py);
        if (std::isfinite(d) && d > 0.0) {
            p.position = Vec3((px - k.cx) * d / k.fx, (py - k.cy) * d / k.fy, d);
            p.valid = true;
        }
        out.push_back(p);
    }
    return out;
}

Vec3 camera_to_grid_frame(const Vec3& c) { return {c.x(), c.z(), -c.y()}; }

GaussianSet init_gaussians(const std::vector<Vec3>& points, const VoxelGridSpec& spec,
                           std::size_t num_classes, ScaleRange range, std::uint64_t seed) {
    spec.validate();
    if (num_classes < 2)
        throw InvalidInput("num_classes must be at least 2");
    if (!(range.min > 0.0) || !(range.max >= range.min) || !std::isfinite(range.max))
        throw InvalidInput("scale range must satisfy 0 < min <= max");

    const Vec3 lo = spec.origin;
    const Vec3 hi = spec.origin + spec.extent();
    const Vec3 slack = Vec3::Constant(spec.voxel_size);

    Rng rng(seed);
    GaussianSet out;
    out.reserve(points.size());
    for (const Vec3& p : points) {
        if (!p.allFinite())
            continue;
        if ((p.array() < (lo - slack).array()).any() || (p.array() > (hi + slack).array()).any())
            continue;
        const Vec3 mean = p.cwiseMax(lo).cwiseMin(hi);
        const Vec3 scale(rng.uniform(range.min, range.max), rng.uniform(range.min, range.max),
                         rng.uniform(range.min, range.max));
        out.emplace_back(mean, scale, Quat::identity(), kInitialOpacity,
                         std::vector<double>(num_classes - 1, 0.0));
    }
    return out;
}

} // namespace splatvox

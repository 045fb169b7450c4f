// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatvox/gaussian.hpp"
#include "splatvox/grid.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace splatvox {

struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    std::uint32_t width = 0;
    std::uint32_t height = 0;

    /// Throws InvalidInput unless fx, fy > 0 and the principal point lies
    /// inside the image.
    void validate() const;
};

/// Row-major depth image in meters; non-positive entries are invalid.
struct DepthMap {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<double> depth;

    double at(std::uint32_t u, std::uint32_t v) const { return depth[std::size_t{v} * width + u]; }
};

/// Normalized image positions (u, v) in [0, 1]^2, row-major.
struct ReferenceGrid {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::array<double, 2>> points;
};

/// rows x cols cell centers ((j + 0.5) / cols, (i + 0.5) / rows).
ReferenceGrid make_reference_grid(std::uint32_t rows, std::uint32_t cols);

struct BackprojectedPoint {
    Vec3 position = Vec3::Zero(); ///< camera frame: x right, y down, z forward
    bool valid = false;
};

/// Samples the nearest pixel to (u (W - 1), v (H - 1)) and lifts it through
/// the pinhole model. Throws InvalidInput when the depth map and intrinsics
/// disagree on the image size.
std::vector<BackprojectedPoint> backproject(const DepthMap& depth, const CameraIntrinsics& k,
                                            const ReferenceGrid& pts);

/// Maps camera coordinates into the grid frame: x right, y forward, z up.
Vec3 camera_to_grid_frame(const Vec3& camera_point);

struct ScaleRange {
    double min = 0.01;
    double max = 0.16;
};

/// Initial opacity of lifted primitives.
inline constexpr double kInitialOpacity = 0.5;

/// One primitive per point (grid frame) lying within one voxel of the grid
/// extent: mean clamped to the extent, per-axis scales uniform in `range`
/// from `seed`, identity rotation, opacity 0.5 and zero logits of length
/// num_classes - 1. Throws InvalidInput on an invalid range or class count.
GaussianSet init_gaussians(const std::vector<Vec3>& points, const VoxelGridSpec& spec,
                           std::size_t num_classes, ScaleRange range, std::uint64_t seed);

} // namespace splatvox

// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatvox/gaussian.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace splatvox {

/// Axis-aligned voxel lattice. Voxel (i, j, k) covers
/// [origin + (i, j, k) * voxel_size, origin + (i + 1, j + 1, k + 1) * voxel_size).
struct VoxelGridSpec {
    Vec3 origin = Vec3::Zero();
    double voxel_size = 0.08;
    std::array<std::uint32_t, 3> dims{60, 60, 36};

    /// 60 x 60 x 36 voxels of 0.08 m: a 4.8 x 4.8 x 2.88 m block.
    static VoxelGridSpec occ_scannet();

    /// Throws InvalidInput on non-positive size or dims.
    void validate() const;

    std::size_t voxel_count() const {
        return std::size_t{dims[0]} * dims[1] * dims[2];
    }
    /// Row-major, z fastest.
    std::size_t linear_index(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
        return (std::size_t{i} * dims[1] + j) * dims[2] + k;
    }
    Vec3 voxel_center(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
        return origin + voxel_size * Vec3(i + 0.5, j + 0.5, k + 0.5);
    }
    Vec3 voxel_center(std::size_t linear) const;
    Vec3 extent() const {
        return voxel_size * Vec3(dims[0], dims[1], dims[2]);
    }

    bool operator==(const VoxelGridSpec& other) const {
        return origin == other.origin && voxel_size == other.voxel_size && dims == other.dims;
    }
};

/// Per-voxel distribution over C classes; channel 0 is the empty class.
class SemanticProbGrid {
public:
    SemanticProbGrid(VoxelGridSpec spec, std::size_t num_classes);

    const VoxelGridSpec& spec() const { return spec_; }
    std::size_t num_classes() const { return num_classes_; }
    std::size_t voxel_count() const { return spec_.voxel_count(); }

    std::span<double> voxel(std::size_t linear) {
        return {data_.data() + linear * num_classes_, num_classes_};
    }
    std::span<const double> voxel(std::size_t linear) const {
        return {data_.data() + linear * num_classes_, num_classes_};
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    VoxelGridSpec spec_;
    std::size_t num_classes_;
    std::vector<double> data_;
};

/// One class label per voxel, 0 = empty.
struct LabelGrid {
    VoxelGridSpec spec;
    std::vector<std::uint8_t> labels;

    explicit LabelGrid(VoxelGridSpec s, std::uint8_t fill = 0)
        : spec(s), labels(s.voxel_count(), fill) {}
};

/// Per-voxel argmax; ties go to the lowest class index.
LabelGrid argmax_labels(const SemanticProbGrid& grid);

} // namespace splatvox

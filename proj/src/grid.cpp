// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/grid.hpp"

#include "splatvox/error.hpp"

#include <cmath>
#include <limits>

namespace splatvox {

VoxelGridSpec VoxelGridSpec::occ_scannet() {
    VoxelGridSpec spec;
    spec.origin = Vec3(-2.4, 0.0, -1.44);
    spec.voxel_size = 0.08;
    spec.dims = {60, 60, 36};
    return spec;
}

void VoxelGridSpec::validate() const {
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size))
        throw InvalidInput("voxel size must be positive");
    if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
        throw InvalidInput("grid dims must be positive");
    if (!origin.allFinite())
        throw InvalidInput("grid origin must be finite");
}

Vec3 VoxelGridSpec::voxel_center(std::size_t linear) const {
    const std::uint32_t k = static_cast<std::uint32_t>(linear % dims[2]);
    const std::size_t ij = linear / dims[2];
    const std::uint32_t j = static_cast<std::uint32_t>(ij % dims[1]);
    const std::uint32_t i = static_cast<std::uint32_t>(ij / dims[1]);
    return voxel_center(i, j, k);
}

SemanticProbGrid::SemanticProbGrid(VoxelGridSpec spec, std::size_t num_classes)
    : spec_(spec), num_classes_(num_classes) {
    spec_.validate();
    if (num_classes_ < 2)
        throw InvalidInput("a probability grid needs the empty class plus at least one class");
    if (num_classes_ > 256)
        throw InvalidInput("at most 256 classes are supported");
    data_.assign(spec_.voxel_count() * num_classes_, 0.0);
}

LabelGrid argmax_labels(const SemanticProbGrid& grid) {
    LabelGrid out(grid.spec());
    for (std::size_t v = 0; v < grid.voxel_count(); ++v) {
        const auto probs = grid.voxel(v);
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.size(); ++c)
            if (probs[c] > probs[best])
                best = c;
        out.labels[v] = static_cast<std::uint8_t>(best);
    }
    return out;
}

} // namespace splatvox

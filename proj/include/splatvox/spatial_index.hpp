// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatvox/gaussian.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace splatvox {

using PrimitiveId = std::uint32_t;

struct CellCoord {
    std::int32_t x;
    std::int32_t y;
    std::int32_t z;
    bool operator==(const CellCoord&) const = default;
};

struct CellCoordHash {
    std::size_t operator()(const CellCoord& c) const noexcept {
        std::uint64_t h = static_cast<std::uint32_t>(c.x);
        h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(c.y);
        h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(c.z);
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

/// Uniform hash grid over primitive influence spheres.
///
/// Primitive i has influence radius r_i = kappa * max(s_i) and is listed in
/// every cell its sphere touches. Any point whose kernel value against G_i
/// is at least exp(-kappa^2 / 2) lies inside that sphere, so the cell lists
/// are a superset of the thresholded neighborhood. Ids in each cell are
/// ascending.
class SpatialIndex {
public:
    static constexpr double kDefaultKappa = 3.0;
    static constexpr double kEmptyCellSize = 0.08;

    /// Throws InvalidInput when kappa <= 0.
    static SpatialIndex build(const GaussianSet& set, double kappa = kDefaultKappa);

    double kappa() const { return kappa_; }
    /// exp(-kappa^2 / 2)
    double kernel_cutoff() const;
    double cell_size() const { return cell_size_; }
    std::size_t primitive_count() const { return radii_.size(); }
    double radius(PrimitiveId id) const { return radii_[id]; }

    /// Ids whose influence sphere contains x, ascending. Empty outside the
    /// indexed region.
    std::vector<PrimitiveId> neighbors(const Vec3& x) const;

    CellCoord cell_of(const Vec3& x) const;
    /// Dense slot for a cell, or nullopt when no primitive touches it.
    std::optional<std::size_t> find_cell(const CellCoord& c) const;
    std::span<const PrimitiveId> cell_members(std::size_t slot) const { return cells_[slot]; }
    std::size_t cell_count() const { return cells_.size(); }

    /// True when this index was built over exactly these primitive means.
    bool matches(const GaussianSet& set) const;

private:
    double kappa_ = kDefaultKappa;
    double cell_size_ = kEmptyCellSize;
    std::vector<Vec3> means_;
    std::vector<double> radii_;
    std::unordered_map<CellCoord, std::uint32_t, CellCoordHash> lookup_;
    std::vector<std::vector<PrimitiveId>> cells_;
};

/// Inflated squared radius used for every sphere test.
inline double padded_radius_sq(double r) {
    const double padded = r * (1.0 + 1e-12) + 1e-12;
    return padded * padded;
}

} // namespace splatvox

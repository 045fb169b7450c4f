// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/spatial_index.hpp"

#include "splatvox/error.hpp"

#include <algorithm>
#include <cmath>

namespace splatvox {

namespace {

double median(std::vector<double> values) {
    const std::size_t n = values.size();
    std::sort(values.begin(), values.end());
    if (n % 2 == 1)
        return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::int32_t to_cell(double v, double cell) {
    constexpr double kLimit = 1 << 30;
    return static_cast<std::int32_t>(std::clamp(std::floor(v / cell), -kLimit, kLimit));
}

} // namespace

SpatialIndex SpatialIndex::build(const GaussianSet& set, double kappa) {
    if (!(kappa > 0.0) || !std::isfinite(kappa))
        throw InvalidInput("kappa must be positive and finite");

    SpatialIndex index;
    index.kappa_ = kappa;
    index.means_.reserve(set.size());
    index.radii_.reserve(set.size());
    for (const auto& g : set) {
        if (!g.mean().allFinite() || !g.scale().allFinite())
            throw InvalidInput("primitive mean and scale must be finite");
        index.means_.push_back(g.mean());
        index.radii_.push_back(kappa * g.max_scale());
    }
    if (set.empty())
        return index;

    std::vector<double> diameters(index.radii_.size());
    std::transform(index.radii_.begin(), index.radii_.end(), diameters.begin(),
                   [](double r) { return 2.0 * r; });
    index.cell_size_ = median(std::move(diameters));
    const double cs = index.cell_size_;

    for (PrimitiveId id = 0; id < set.size(); ++id) {
        const Vec3& mu = index.means_[id];
        const double r = index.radii_[id];
        const double r2 = padded_radius_sq(r);
        const CellCoord lo{to_cell(mu.x() - r, cs), to_cell(mu.y() - r, cs), to_cell(mu.z() - r, cs)};
        const CellCoord hi{to_cell(mu.x() + r, cs), to_cell(mu.y() + r, cs), to_cell(mu.z() + r, cs)};
        for (std::int32_t cx = lo.x; cx <= hi.x; ++cx) {
            for (std::int32_t cy = lo.y; cy <= hi.y; ++cy) {
                for (std::int32_t cz = lo.z; cz <= hi.z; ++cz) {
                    // Squared distance from the mean to the cell box.
                    const Vec3 box_lo = cs * Vec3(cx, cy, cz);
                    const Vec3 box_hi = box_lo + Vec3::Constant(cs);
                    const Vec3 nearest = mu.cwiseMax(box_lo).cwiseMin(box_hi);
                    if ((nearest - mu).squaredNorm() > r2)
                        continue;
                    const CellCoord key{cx, cy, cz};
                    auto [it, inserted] = index.lookup_.try_emplace(
                        key, static_cast<std::uint32_t>(index.cells_.size()));
                    if (inserted)
                        index.cells_.emplace_back();
                    index.cells_[it->second].push_back(id);
                }
            }
        }
    }
    return index;
}

double SpatialIndex::kernel_cutoff() const { return std::exp(-0.5 * kappa_ * kappa_); }

CellCoord SpatialIndex::cell_of(const Vec3& x) const {
    return {to_cell(x.x(), cell_size_), to_cell(x.y(), cell_size_), to_cell(x.z(), cell_size_)};
}

std::optional<std::size_t> SpatialIndex::find_cell(const CellCoord& c) const {
    const auto it = lookup_.find(c);
    if (it == lookup_.end())
        return std::nullopt;
    return it->second;
}

std::vector<PrimitiveId> SpatialIndex::neighbors(const Vec3& x) const {
    std::vector<PrimitiveId> out;
    if (!x.allFinite())
        return out;
    const auto slot = find_cell(cell_of(x));
    if (!slot)
        return out;
    for (PrimitiveId id : cells_[*slot])
        if ((x - means_[id]).squaredNorm() <= padded_radius_sq(radii_[id]))
            out.push_back(id);
    return out;
}

bool SpatialIndex::matches(const GaussianSet& set) const {
    if (set.size() != means_.size())
        return false;
    for (std::size_t i = 0; i < set.size(); ++i)
        if (set[i].mean() != means_[i] || kappa_ * set[i].max_scale() != radii_[i])
            return false;
    return true;
}

} // namespace splatvox

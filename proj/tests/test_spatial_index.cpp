// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/error.hpp"
#include "splatvox/spatial_index.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace splatvox {
namespace {

GaussianSet thousand_primitives() {
    return testing::random_set(21, 1000, VoxelGridSpec::occ_scannet(), 12, 0.01, 0.16);
}

TEST(SpatialIndex, EmptySetAnswersEveryQueryWithNothing) {
    const auto index = SpatialIndex::build({});
    EXPECT_EQ(index.cell_size(), SpatialIndex::kEmptyCellSize);
    Rng rng(1);
    for (int t = 0; t < 50; ++t)
        EXPECT_TRUE(index.neighbors(testing::random_point(rng, Vec3::Constant(-5), Vec3::Constant(5))).empty());
}

TEST(SpatialIndex, SinglePrimitiveCoversEveryCellWithinItsRadius) {
    const GaussianSet set{GaussianPrimitive({0.05, -0.1, 0.2}, Vec3::Constant(0.1), Quat::identity(),
                                            0.5, {0.0, 0.0})};
    const auto index = SpatialIndex::build(set, 3.0);
    EXPECT_NEAR(index.radius(0), 0.3, 1e-15);

    const double h = index.cell_size();
    const Vec3 mu = set[0].mean();
    const CellCoord center = index.cell_of(mu);
    for (int dx = -5; dx <= 5; ++dx)
        for (int dy = -5; dy <= 5; ++dy)
            for (int dz = -5; dz <= 5; ++dz) {
                const CellCoord c{center.x + dx, center.y + dy, center.z + dz};
                const Vec3 lo = h * Vec3(c.x, c.y, c.z);
                const Vec3 hi = lo + Vec3::Constant(h);
                const Vec3 nearest = mu.cwiseMax(lo).cwiseMin(hi);
                if ((nearest - mu).norm() < 0.3) {
                    const auto slot = index.find_cell(c);
                    ASSERT_TRUE(slot.has_value());
                    const auto members = index.cell_members(*slot);
                    EXPECT_EQ(std::count(members.begin(), members.end(), 0u), 1);
                }
            }
}

TEST(SpatialIndex, NeighborsContainEveryPrimitiveAboveTheCutoff) {
    const auto set = thousand_primitives();
    const auto index = SpatialIndex::build(set, 3.0);
    const double cutoff = std::exp(-4.5);
    EXPECT_NEAR(index.kernel_cutoff(), cutoff, 1e-15);

    Rng rng(22);
    const auto spec = VoxelGridSpec::occ_scannet();
    std::size_t nonempty = 0;
    for (int t = 0; t < 100; ++t) {
        // Half the queries sit near a primitive so the check is not vacuous.
        Vec3 x = testing::random_point(rng, spec.origin, spec.origin + spec.extent());
        if (t % 2 == 0)
            x = set[static_cast<std::size_t>(rng.uniform() * set.size())].mean() +
                testing::random_point(rng, Vec3::Constant(-0.2), Vec3::Constant(0.2));
        const auto got = index.neighbors(x);
        const std::set<PrimitiveId> got_set(got.begin(), got.end());
        for (PrimitiveId i = 0; i < set.size(); ++i)
            if (gaussian_kernel(x, set[i]) >= cutoff) {
                EXPECT_TRUE(got_set.count(i)) << "primitive " << i << " missing";
                ++nonempty;
            }
    }
    EXPECT_GT(nonempty, 50u);
}

TEST(SpatialIndex, NeighborsAreAscendingAndUnique) {
    const auto set = thousand_primitives();
    const auto index = SpatialIndex::build(set);
    Rng rng(23);
    for (int t = 0; t < 100; ++t) {
        const auto got = index.neighbors(set[t].mean());
        EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
        EXPECT_EQ(std::adjacent_find(got.begin(), got.end()), got.end());
    }
    for (std::size_t slot = 0; slot < index.cell_count(); ++slot) {
        const auto m = index.cell_members(slot);
        EXPECT_TRUE(std::is_sorted(m.begin(), m.end()));
        EXPECT_EQ(std::adjacent_find(m.begin(), m.end()), m.end());
    }
}

TEST(SpatialIndex, QueryAtAMeanContainsThatPrimitive) {
    const auto set = thousand_primitives();
    const auto index = SpatialIndex::build(set);
    const auto got = index.neighbors(set[7].mean());
    EXPECT_NE(std::find(got.begin(), got.end(), 7u), got.end());
}

TEST(SpatialIndex, FarQueryIsEmpty) {
    const auto set = thousand_primitives();
    const auto index = SpatialIndex::build(set);
    double max_r = 0.0;
    for (PrimitiveId i = 0; i < set.size(); ++i)
        max_r = std::max(max_r, index.radius(i));
    EXPECT_TRUE(index.neighbors(Vec3(100.0 + 10 * max_r, 0.0, 0.0)).empty());
    EXPECT_TRUE(index.neighbors(Vec3(1e12, -1e12, 1e12)).empty());
}

TEST(SpatialIndex, CellSizeIsMedianInfluenceDiameter) {
    const GaussianSet set{
        GaussianPrimitive(Vec3::Zero(), Vec3::Constant(0.1), Quat::identity(), 0.5, {0.0}),
        GaussianPrimitive(Vec3::Ones(), Vec3(0.2, 0.05, 0.05), Quat::identity(), 0.5, {0.0}),
        GaussianPrimitive(-Vec3::Ones(), Vec3::Constant(0.4), Quat::identity(), 0.5, {0.0})};
    const auto index = SpatialIndex::build(set, 2.0);
    EXPECT_NEAR(index.cell_size(), 2.0 * 2.0 * 0.2, 1e-15);
}

TEST(SpatialIndex, BuildIsDeterministic) {
    const auto set = thousand_primitives();
    const auto a = SpatialIndex::build(set);
    const auto b = SpatialIndex::build(set);
    Rng rng(24);
    for (int t = 0; t < 100; ++t) {
        const Vec3 x = set[t * 3].mean();
        EXPECT_EQ(a.neighbors(x), b.neighbors(x));
    }
    EXPECT_TRUE(a.matches(set));
    EXPECT_FALSE(a.matches(GaussianSet(set.begin(), set.begin() + 10)));
}

TEST(SpatialIndex, RejectsInvalidKappa) {
    EXPECT_THROW(SpatialIndex::build({}, 0.0), InvalidInput);
    EXPECT_THROW(SpatialIndex::build({}, -1.0), InvalidInput);
    EXPECT_THROW(SpatialIndex::build({}, std::nan("")), InvalidInput);
}

} // namespace
} // namespace splatvox

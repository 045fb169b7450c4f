// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/aggregators.hpp"
#include "splatvox/error.hpp"
#include "splatvox/gmf_attention.hpp"
#include "splatvox/simd/kernels.hpp"
#include "splatvox/spatial_index.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

namespace splatvox {
namespace {

using simd::Isa;

/// Restores the process-wide kernel selection when a test ends.
class IsaGuard {
public:
    IsaGuard() : saved_(simd::active_kernels().isa) {}
    ~IsaGuard() { simd::select_isa(saved_); }
    IsaGuard(const IsaGuard&) = delete;
    IsaGuard& operator=(const IsaGuard&) = delete;

private:
    Isa saved_;
};

#define REQUIRE_AVX2()                                                   \
    do {                                                                 \
        if (!simd::isa_supported(Isa::Avx2))                             \
            GTEST_SKIP() << "AVX2/FMA not available on this CPU or build"; \
    } while (0)

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v)
        x = rng.uniform(lo, hi);
    return v;
}

TEST(IsaDispatch, NamesRoundTrip) {
    EXPECT_EQ(simd::isa_name(Isa::Scalar), "scalar");
    EXPECT_EQ(simd::isa_name(Isa::Avx2), "avx2");
    EXPECT_EQ(simd::parse_isa("scalar"), Isa::Scalar);
    EXPECT_EQ(simd::parse_isa("avx2"), Isa::Avx2);
    EXPECT_THROW(simd::parse_isa("neon"), InvalidInput);
}

TEST(IsaDispatch, ScalarAlwaysAvailableAndSelectable) {
    IsaGuard guard;
    EXPECT_TRUE(simd::isa_supported(Isa::Scalar));
    simd::select_isa(Isa::Scalar);
    EXPECT_EQ(simd::active_kernels().isa, Isa::Scalar);
    EXPECT_EQ(simd::kernels_for(simd::detect_isa()).isa, simd::detect_isa());
    if (!simd::isa_supported(Isa::Avx2))
        EXPECT_THROW(simd::select_isa(Isa::Avx2), InvalidInput);
}

TEST(QuadraticForms, ScalarMatchesDirectFormula) {
    Rng rng(1);
    const std::size_t n = 13;
    const auto mx = random_vec(rng, n), my = random_vec(rng, n), mz = random_vec(rng, n);
    const auto a = random_vec(rng, n, 0.5, 2.0), d = random_vec(rng, n, 0.5, 2.0), f = random_vec(rng, n, 0.5, 2.0);
    const auto b = random_vec(rng, n, -0.2, 0.2), c = random_vec(rng, n, -0.2, 0.2), e = random_vec(rng, n, -0.2, 0.2);
    const simd::GaussianLanes lanes{mx.data(), my.data(), mz.data(), a.data(), b.data(),
                                    c.data(),  d.data(),  e.data(),  f.data(), n};
    std::vector<double> out(n);
    simd::kernels_for(Isa::Scalar).quadratic_forms(lanes, 0.3, -0.1, 0.7, out.data());
    for (std::size_t i = 0; i < n; ++i) {
        // Full symmetric-matrix sandwich as an independent formulation.
        const double v[3] = {0.3 - mx[i], -0.1 - my[i], 0.7 - mz[i]};
        const double m[3][3] = {{a[i], b[i], c[i]}, {b[i], d[i], e[i]}, {c[i], e[i], f[i]}};
        double q = 0.0;
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s)
                q += v[r] * m[r][s] * v[s];
        EXPECT_NEAR(out[i], q, 1e-13);
    }
}

TEST(QuadraticForms, Avx2MatchesScalarAcrossTails) {
    REQUIRE_AVX2();
    Rng rng(2);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 127u}) {
        std::vector<std::vector<double>> cols;
        for (int c = 0; c < 9; ++c)
            cols.push_back(random_vec(rng, n, c < 3 ? -2.0 : -1.0, c < 3 ? 2.0 : 3.0));
        const simd::GaussianLanes lanes{cols[0].data(), cols[1].data(), cols[2].data(),
                                        cols[3].data(), cols[4].data(), cols[5].data(),
                                        cols[6].data(), cols[7].data(), cols[8].data(), n};
        std::vector<double> s(n + 1, -7.0), v(n + 1, -7.0);
        simd::kernels_for(Isa::Scalar).quadratic_forms(lanes, 0.25, -0.5, 1.5, s.data());
        simd::kernels_for(Isa::Avx2).quadratic_forms(lanes, 0.25, -0.5, 1.5, v.data());
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_NEAR(v[i], s[i], 1e-12 * (1.0 + std::abs(s[i]))) << "n=" << n << " i=" << i;
        EXPECT_EQ(v[n], -7.0) << "wrote past the end for n=" << n;
    }
}

TEST(Gemm, ScalarMatchesNaiveTripleLoop) {
    Rng rng(3);
    const std::size_t m = 5, k = 7, n = 3;
    const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
    std::vector<double> c(m * n, 99.0);
    simd::kernels_for(Isa::Scalar).gemm(a.data(), b.data(), c.data(), m, k, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t p = 0; p < k; ++p)
                sum += a[i * k + p] * b[p * n + j];
            EXPECT_NEAR(c[i * n + j], sum, 1e-14);
        }
}

TEST(Gemm, Avx2MatchesScalarOnOddShapes) {
    REQUIRE_AVX2();
    Rng rng(4);
    const std::size_t sizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 13, 16, 17, 33};
    for (std::size_t m : sizes)
        for (std::size_t k : {1u, 3u, 8u, 24u})
            for (std::size_t n : sizes) {
                const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
                std::vector<double> s(m * n + 1, 5.0), v(m * n + 1, 5.0);
                simd::kernels_for(Isa::Scalar).gemm(a.data(), b.data(), s.data(), m, k, n);
                simd::kernels_for(Isa::Avx2).gemm(a.data(), b.data(), v.data(), m, k, n);
                for (std::size_t i = 0; i < m * n; ++i)
                    ASSERT_NEAR(v[i], s[i], 1e-12) << m << "x" << k << "x" << n;
                EXPECT_EQ(v[m * n], 5.0);
            }
}

TEST(NearestSq, ScalarAndAvx2AgreeWithBruteForce) {
    Rng rng(5);
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 6u, 11u, 100u}) {
        const auto xs = random_vec(rng, n), ys = random_vec(rng, n), zs = random_vec(rng, n);
        for (int t = 0; t < 10; ++t) {
            const double px = rng.uniform(-1.5, 1.5), py = rng.uniform(-1.5, 1.5), pz = rng.uniform(-1.5, 1.5);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i)
                best = std::min(best, std::pow(xs[i] - px, 2) + std::pow(ys[i] - py, 2) + std::pow(zs[i] - pz, 2));
            const double s = simd::kernels_for(Isa::Scalar).nearest_sq_distance(xs.data(), ys.data(), zs.data(),
                                                                                n, px, py, pz);
            EXPECT_NEAR(s, best, 1e-14);
            if (simd::isa_supported(Isa::Avx2)) {
                const double v = simd::kernels_for(Isa::Avx2).nearest_sq_distance(xs.data(), ys.data(),
                                                                                   zs.data(), n, px, py, pz);
                EXPECT_NEAR(v, s, 1e-14);
            }
        }
    }
    EXPECT_EQ(simd::kernels_for(Isa::Scalar).nearest_sq_distance(nullptr, nullptr, nullptr, 0, 0, 0, 0),
              std::numeric_limits<double>::infinity());
}

TEST(DispatchedPipelines, SplatAgreesAcrossIsa) {
    REQUIRE_AVX2();
    IsaGuard guard;
    const auto spec = testing::small_grid();
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const auto set = testing::random_set(seed, 150, spec, 8);
        const auto index = SpatialIndex::build(set);
        for (auto mode : {AggregatorMode::Pgs, AggregatorMode::Dga}) {
            simd::select_isa(Isa::Scalar);
            const auto s = splat(set, spec, 8, mode, index, 1);
            simd::select_isa(Isa::Avx2);
            const auto v = splat(set, spec, 8, mode, index, 1);
            for (std::size_t i = 0; i < s.data().size(); ++i)
                ASSERT_NEAR(v.data()[i], s.data()[i], 1e-9) << "seed " << seed;
        }
    }
}

TEST(DispatchedPipelines, AttentionAgreesAcrossIsa) {
    REQUIRE_AVX2();
    IsaGuard guard;
    for (std::size_t n : {1u, 63u, 64u, 65u, 200u}) {
        const auto feats = random_features(n, 24, 3, 40 + n);
        const auto w = GcaWeights::random(24, 4, 7);
        simd::select_isa(Isa::Scalar);
        const auto s = gca_forward(feats, w);
        simd::select_isa(Isa::Avx2);
        const auto v = gca_forward(feats, w);
        ASSERT_EQ(s.data.size(), v.data.size());
        for (std::size_t i = 0; i < s.data.size(); ++i)
            ASSERT_NEAR(v.data[i], s.data[i], 1e-10) << "n=" << n;
    }
}

} // namespace
} // namespace splatvox

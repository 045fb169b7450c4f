// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "kernels_impl.hpp"

#include <immintrin.h>

#include <algorithm>
#include <limits>

namespace splatvox::simd::avx2 {

void quadratic_forms(const GaussianLanes& g, double px, double py, double pz, double* out) {
    const __m256d vx = _mm256_set1_pd(px);
    const __m256d vy = _mm256_set1_pd(py);
    const __m256d vz = _mm256_set1_pd(pz);
    const __m256d two = _mm256_set1_pd(2.0);
    std::size_t i = 0;
    for (; i + 4 <= g.count; i += 4) {
        const __m256d dx = _mm256_sub_pd(vx, _mm256_loadu_pd(g.mx + i));
        const __m256d dy = _mm256_sub_pd(vy, _mm256_loadu_pd(g.my + i));
        const __m256d dz = _mm256_sub_pd(vz, _mm256_loadu_pd(g.mz + i));

        __m256d diag = _mm256_mul_pd(_mm256_mul_pd(_mm256_loadu_pd(g.i00 + i), dx), dx);
        diag = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(g.i11 + i), dy), dy, diag);
        diag = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(g.i22 + i), dz), dz, diag);

        __m256d off = _mm256_mul_pd(_mm256_mul_pd(_mm256_loadu_pd(g.i01 + i), dx), dy);
        off = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(g.i02 + i), dx), dz, off);
        off = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(g.i12 + i), dy), dz, off);

        _mm256_storeu_pd(out + i, _mm256_fmadd_pd(two, off, diag));
    }
    for (; i < g.count; ++i) {
        const double dx = px - g.mx[i];
        const double dy = py - g.my[i];
        const double dz = pz - g.mz[i];
        const double diag = g.i00[i] * dx * dx + g.i11[i] * dy * dy + g.i22[i] * dz * dz;
        const double off = g.i01[i] * dx * dy + g.i02[i] * dx * dz + g.i12[i] * dy * dz;
        out[i] = diag + 2.0 * off;
    }
}

namespace {

// c[4 x 8] block at (i, j) accumulated over the full k range.
inline void gemm_block_4x8(const double* a, const double* b, double* c, std::size_t i,
                           std::size_t j, std::size_t k, std::size_t n) {
    __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
    __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
    __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
    __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
    const double* a0 = a + (i + 0) * k;
    const double* a1 = a + (i + 1) * k;
    const double* a2 = a + (i + 2) * k;
    const double* a3 = a + (i + 3) * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * n + j;
        const __m256d b0 = _mm256_loadu_pd(brow);
        const __m256d b1 = _mm256_loadu_pd(brow + 4);
        __m256d av = _mm256_broadcast_sd(a0 + p);
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_broadcast_sd(a1 + p);
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_broadcast_sd(a2 + p);
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_broadcast_sd(a3 + p);
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
    }
    _mm256_storeu_pd(c + (i + 0) * n + j, c00);
    _mm256_storeu_pd(c + (i + 0) * n + j + 4, c01);
    _mm256_storeu_pd(c + (i + 1) * n + j, c10);
    _mm256_storeu_pd(c + (i + 1) * n + j + 4, c11);
    _mm256_storeu_pd(c + (i + 2) * n + j, c20);
    _mm256_storeu_pd(c + (i + 2) * n + j + 4, c21);
    _mm256_storeu_pd(c + (i + 3) * n + j, c30);
    _mm256_storeu_pd(c + (i + 3) * n + j + 4, c31);
}

// One row, columns [j0, n).
inline void gemm_row_tail(const double* a, const double* b, double* c, std::size_t i,
                          std::size_t j0, std::size_t k, std::size_t n) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    std::size_t j = j0;
    for (; j + 4 <= n; j += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t p = 0; p < k; ++p)
            acc = _mm256_fmadd_pd(_mm256_broadcast_sd(arow + p), _mm256_loadu_pd(b + p * n + j),
                                  acc);
        _mm256_storeu_pd(crow + j, acc);
    }
    for (; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p)
            acc += arow[p] * b[p * n + j];
        crow[j] = acc;
    }
}

} // namespace

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n) {
    const std::size_t n8 = n - n % 8;
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        for (std::size_t j = 0; j < n8; j += 8)
            gemm_block_4x8(a, b, c, i, j, k, n);
        for (std::size_t r = i; r < i + 4; ++r)
            gemm_row_tail(a, b, c, r, n8, k, n);
    }
    for (; i < m; ++i)
        gemm_row_tail(a, b, c, i, 0, k, n);
}

double nearest_sq_distance(const double* xs, const double* ys, const double* zs, std::size_t n,
                           double px, double py, double pz) {
    const double inf = std::numeric_limits<double>::infinity();
    __m256d best = _mm256_set1_pd(inf);
    const __m256d vx = _mm256_set1_pd(px);
    const __m256d vy = _mm256_set1_pd(py);
    const __m256d vz = _mm256_set1_pd(pz);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vx);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vy);
        const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), vz);
        __m256d d2 = _mm256_mul_pd(dx, dx);
        d2 = _mm256_fmadd_pd(dy, dy, d2);
        d2 = _mm256_fmadd_pd(dz, dz, d2);
        best = _mm256_min_pd(best, d2);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, best);
    double out = std::min(std::min(lanes[0], lanes[1]), std::min(lanes[2], lanes[3]));
    for (; i < n; ++i) {
        const double dx = xs[i] - px;
        const double dy = ys[i] - py;
        const double dz = zs[i] - pz;
        out = std::min(out, dx * dx + dy * dy + dz * dz);
    }
    return out;
}

} // namespace splatvox::simd::avx2

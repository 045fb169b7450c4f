// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "kernels_impl.hpp"

#include <algorithm>
#include <limits>

namespace splatvox::simd::scalar {

void quadratic_forms(const GaussianLanes& g, double px, double py, double pz, double* out) {
    for (std::size_t i = 0; i < g.count; ++i) {
        const double dx = px - g.mx[i];
        const double dy = py - g.my[i];
        const double dz = pz - g.mz[i];
        const double diag = g.i00[i] * dx * dx + g.i11[i] * dy * dy + g.i22[i] * dz * dz;
        const double off = g.i01[i] * dx * dy + g.i02[i] * dx * dz + g.i12[i] * dy * dz;
        out[i] = diag + 2.0 * off;
    }
}

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n) {
    std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j)
                crow[j] += av * brow[j];
        }
    }
}

double nearest_sq_distance(const double* xs, const double* ys, const double* zs, std::size_t n,
                           double px, double py, double pz) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - px;
        const double dy = ys[i] - py;
        const double dz = zs[i] - pz;
        best = std::min(best, dx * dx + dy * dy + dz * dz);
    }
    return best;
}

} // namespace splatvox::simd::scalar

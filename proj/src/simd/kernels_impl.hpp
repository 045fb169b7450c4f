// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatvox/simd/kernels.hpp"

namespace splatvox::simd {

namespace scalar {
void quadratic_forms(const GaussianLanes& lanes, double px, double py, double pz, double* out);
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n);
double nearest_sq_distance(const double* xs, const double* ys, const double* zs, std::size_t n,
                           double px, double py, double pz);
} // namespace scalar

#if defined(SPLATVOX_WITH_AVX2)
namespace avx2 {
void quadratic_forms(const GaussianLanes& lanes, double px, double py, double pz, double* out);
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n);
double nearest_sq_distance(const double* xs, const double* ys, const double* zs, std::size_t n,
                           double px, double py, double pz);
} // namespace avx2
#endif

} // namespace splatvox::simd

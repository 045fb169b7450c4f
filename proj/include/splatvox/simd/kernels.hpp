// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

// Arithmetic inner loops with a portable scalar reference and an AVX2/FMA
// variant. The variant is picked once at startup from the CPU feature bits
// and can be overridden with select_isa(). Every variant must agree with the
// scalar one to rounding (see tests/test_simd_kernels.cpp).

namespace splatvox::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name); // "scalar" | "avx2"

/// Structure-of-arrays view of primitive means and the six unique entries of
/// their inverse covariances.
struct GaussianLanes {
    const double* mx;
    const double* my;
    const double* mz;
    const double* i00;
    const double* i01;
    const double* i02;
    const double* i11;
    const double* i12;
    const double* i22;
    std::size_t count;
};

/// out[i] = (p - mu_i)^T Sigma_i^{-1} (p - mu_i)
using QuadraticFormsFn = void (*)(const GaussianLanes& lanes, double px, double py, double pz,
                                  double* out);

/// Row-major c[m x n] = a[m x k] * b[k x n]. c is overwritten.
using GemmFn = void (*)(const double* a, const double* b, double* c, std::size_t m,
                        std::size_t k, std::size_t n);

/// min_i |p - q_i|^2 over n points in SoA layout; +inf when n == 0.
using NearestSqFn = double (*)(const double* xs, const double* ys, const double* zs,
                               std::size_t n, double px, double py, double pz);

struct KernelTable {
    Isa isa;
    QuadraticFormsFn quadratic_forms;
    GemmFn gemm;
    NearestSqFn nearest_sq_distance;
};

bool isa_supported(Isa isa);

/// Best ISA available on this CPU and compiled into the binary.
Isa detect_isa();

/// Table for a specific ISA. Throws InvalidInput when unsupported.
const KernelTable& kernels_for(Isa isa);

/// The table all library code dispatches through.
const KernelTable& active_kernels();

/// Overrides the active ISA process-wide. Throws InvalidInput when
/// unsupported. Not meant to be called while kernels are running.
void select_isa(Isa isa);

} // namespace splatvox::simd

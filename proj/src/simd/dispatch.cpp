// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "kernels_impl.hpp"

#include "splatvox/error.hpp"

#include <atomic>
#include <string>

namespace splatvox::simd {

namespace {

constexpr KernelTable kScalarTable{Isa::Scalar, &scalar::quadratic_forms, &scalar::gemm,
                                   &scalar::nearest_sq_distance};

#if defined(SPLATVOX_WITH_AVX2)
constexpr KernelTable kAvx2Table{Isa::Avx2, &avx2::quadratic_forms, &avx2::gemm,
                                 &avx2::nearest_sq_distance};
#endif

bool cpu_has_avx2() {
#if defined(SPLATVOX_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{&kernels_for(detect_isa())};
    return slot;
}

} // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::Scalar:
        return "scalar";
    case Isa::Avx2:
        return "avx2";
    }
    return "unknown";
}

Isa parse_isa(std::string_view name) {
    if (name == "scalar")
        return Isa::Scalar;
    if (name == "avx2")
        return Isa::Avx2;
    throw InvalidInput("unknown ISA '" + std::string(name) + "'");
}

bool isa_supported(Isa isa) {
    switch (isa) {
    case Isa::Scalar:
        return true;
    case Isa::Avx2:
        return cpu_has_avx2();
    }
    return false;
}

Isa detect_isa() { return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

const KernelTable& kernels_for(Isa isa) {
    if (!isa_supported(isa))
        throw InvalidInput("ISA '" + std::string(isa_name(isa)) + "' is not available");
#if defined(SPLATVOX_WITH_AVX2)
    if (isa == Isa::Avx2)
        return kAvx2Table;
#endif
    return kScalarTable;
}

const KernelTable& active_kernels() { return *active_slot().load(std::memory_order_acquire); }

void select_isa(Isa isa) { active_slot().store(&kernels_for(isa), std::memory_order_release); }

} // namespace splatvox::simd

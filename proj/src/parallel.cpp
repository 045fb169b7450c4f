// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace splatvox {

unsigned resolve_threads(unsigned requested) {
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("SPLATVOX_THREADS")) {
        unsigned value = 0;
        const char* end = env + std::strlen(env);
        const auto [ptr, ec] = std::from_chars(env, end, value);
        if (ec == std::errc{} && ptr == end && value > 0)
            return value;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace splatvox

// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatvox/grid.hpp"

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace splatvox {

/// Entry point of the `splatvox` tool. Results go to `out` as key=value
/// lines, diagnostics to `err`. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Shortest round-trip decimal form; integral values keep a trailing ".0"
/// and non-finite values print as nan / inf / -inf.
std::string format_number(double value);

/// "60x60x36" -> {60, 60, 36}. Throws InvalidInput on malformed text.
std::array<std::uint32_t, 3> parse_dims3(std::string_view text);

/// Grid whose x/z extents are centered on zero and whose y extent starts at
/// zero (camera at the origin looking along +y).
VoxelGridSpec centered_grid(std::array<std::uint32_t, 3> dims, double voxel_size);

/// 64-bit FNV-1a hash of the raw bytes.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);

} // namespace splatvox

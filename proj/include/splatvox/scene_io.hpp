// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatvox/depth_init.hpp"
#include "splatvox/gmf_attention.hpp"
#include "splatvox/grid.hpp"
#include "splatvox/scenes.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace splatvox {

// ---------------------------------------------------------------------------
// Scene files: JSON text
//
//   {"format": "splatvox-scene", "version": 1, "num_classes": C, "count": N,
//    "primitives": [{"mean": [x, y, z], "scale": [sx, sy, sz],
//                    "rotation": [w, x, y, z], "opacity": a,
//                    "logits": [C - 1 values]}, ...]}
//
// Doubles are written in shortest round-trip form, so write-then-read
// reproduces every field bit for bit.
// ---------------------------------------------------------------------------

inline constexpr int kSceneFormatVersion = 1;

std::string scene_to_json(const Scene& scene);
/// Throws FormatError on malformed text, an unknown version, a count that
/// disagrees with the records, or records that fail primitive validation.
Scene scene_from_json(const std::string& text);

void write_scene(const std::filesystem::path& path, const Scene& scene);
Scene read_scene(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Grid files: little-endian binary
//
//   offset  size  field
//   0       4     magic "SSCG"
//   4       2     version (u16, = 1)
//   6       2     element kind (u16): 0 = u8 label, 1 = f32 probability,
//                 2 = f32 depth
//   8       16    dims X, Y, Z, channels (u32 each)
//   24      24    origin x, y, z (f64 each)
//   48      8     voxel size (f64)
//   56      ...   payload, row-major over (X, Y, Z, channels), channels fastest
//
// Depth maps are stored with dims (height, width, 1, 1).
// ---------------------------------------------------------------------------

enum class GridKind : std::uint16_t { Label = 0, Probability = 1, Depth = 2 };

inline constexpr std::uint16_t kGridFormatVersion = 1;
inline constexpr std::size_t kGridHeaderBytes = 56;

struct GridFile {
    GridKind kind = GridKind::Label;
    std::array<std::uint32_t, 4> dims{0, 0, 0, 1};
    Vec3 origin = Vec3::Zero();
    double voxel_size = 0.0;
    std::vector<std::uint8_t> payload; ///< raw little-endian element bytes

    std::size_t element_count() const;
    std::size_t element_size() const { return kind == GridKind::Label ? 1 : 4; }
};

/// Header followed by payload. Throws InvalidInput when the payload length
/// disagrees with the dims.
std::vector<std::uint8_t> encode_grid(const GridFile& grid);
/// Throws FormatError on bad magic, version, kind or payload length.
GridFile decode_grid(std::span<const std::uint8_t> bytes);

void write_grid_file(const std::filesystem::path& path, const GridFile& grid);
GridFile read_grid_file(const std::filesystem::path& path);

GridFile to_grid_file(const LabelGrid& labels);
/// Probabilities are narrowed to f32.
GridFile to_grid_file(const SemanticProbGrid& probs);
GridFile to_grid_file(const DepthMap& depth);

/// Throws FormatError when the file holds a different element kind.
LabelGrid label_grid_from(const GridFile& file);
SemanticProbGrid prob_grid_from(const GridFile& file);
DepthMap depth_map_from(const GridFile& file);

/// Label grid from either a label file or a probability file (argmax).
LabelGrid labels_from_any(const GridFile& file);

// ---------------------------------------------------------------------------
// Attention weights: JSON tensor container
//
//   {"format": "splatvox-tensors", "version": 1, "groups": G,
//    "tensors": {"w_q": {"shape": [D, D], "data": [...row-major...]},
//                "w_k": ..., "w_v": ..., "w_o": ..., "w_a": {"shape": [D/G], ...}}}
// ---------------------------------------------------------------------------

std::string gca_weights_to_json(const GcaWeights& w);
/// Throws FormatError on malformed text or tensors whose shapes fail
/// GcaWeights::validate().
GcaWeights gca_weights_from_json(const std::string& text);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace splatvox

// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatvox/gaussian.hpp"
#include "splatvox/grid.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace splatvox {

/// Training loss weights lambda_1..lambda_6 as used for the depth and scene
/// completion objectives.
struct LossWeights {
    double depth_huber = 10.0;  ///< lambda_1
    double points_huber = 20.0; ///< lambda_2
    double gradient = 0.5;      ///< lambda_3
    double prob_scale = 0.5;    ///< lambda_4
    double focal = 100.0;       ///< lambda_5
    double lovasz = 2.0;        ///< lambda_6
};

/// Predicted probabilities are clamped to [kProbClamp, 1 - kProbClamp].
inline constexpr double kProbClamp = 1e-7;

struct FocalLossResult {
    double value = 0.0;
    std::size_t voxels = 0;  ///< voxels that contributed
    bool empty_mask = false; ///< no voxel selected; value is 0
};

/// Mean over masked voxels of -w_c (1 - p_c)^gamma log p_c, c = ground-truth
/// class. An empty `mask` span selects every voxel. Throws InvalidInput on
/// size disagreement or out-of-range labels.
FocalLossResult focal_loss(const SemanticProbGrid& pred, const LabelGrid& gt, double gamma,
                           std::span<const double> class_weights,
                           std::span<const std::uint8_t> mask = {});

struct ScalGeoResult {
    double loss = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    bool precision_skipped = false;
    bool recall_skipped = false;
    bool specificity_skipped = false;
};

/// Soft precision / recall / specificity loss
/// -(log P + log R + log S) over all voxels, each term clamped at 1e-7.
/// Terms with an empty reference set are skipped and flagged.
ScalGeoResult scal_geo_loss(std::span<const double> occupancy, std::span<const std::uint8_t> gt);

/// Layer weights of the probability scale loss: i / (2n) for layers
/// 1..n-1 and 1 for the final layer.
std::vector<double> prob_scale_weights(std::size_t layers);

/// Weighted sum of already computed per-layer geometric losses.
double prob_scale_loss_from_layers(std::span<const double> layer_losses);

/// Per-layer occupancy grids (earliest first) plus the binary ground truth.
struct LayerOccupancies {
    std::vector<std::vector<double>> layers;
    std::vector<std::uint8_t> gt;
};

/// 1/2 sum_{i<n} (i/n) L_geo^i + L_geo^n. Throws InvalidInput with no layers
/// or mismatched sizes.
double prob_scale_loss(const LayerOccupancies& input);

struct IouResult {
    double iou = 0.0;              ///< NaN when neither grid has an occupied voxel
    std::vector<double> per_class; ///< classes 1..C-1; NaN when absent from gt and pred
    double miou = 0.0;             ///< mean over present classes; NaN when none
    std::size_t evaluated_voxels = 0;
};

/// Geometric IoU (non-empty vs empty) and per-class IoU inside the mask.
/// An empty `mask` span selects every voxel; a mask that selects no voxel is
/// an error. Throws InvalidInput on size disagreement.
IouResult iou_miou(const LabelGrid& pred, const LabelGrid& gt, std::size_t num_classes,
                   std::span<const std::uint8_t> mask = {});

struct DepthMetrics {
    double rmse = 0.0;
    double delta1 = 0.0;     ///< fraction with max(d/d', d'/d) < 1.25
    double chamfer_l1 = 0.0; ///< symmetric mean nearest-neighbour distance
    std::size_t excluded_pairs = 0; ///< non-positive depths left out of delta1
};

inline constexpr double kDelta1Threshold = 1.25;

/// Throws InvalidInput when depth lists differ in length or are empty, or
/// when either point list is empty.
DepthMetrics depth_metrics(std::span<const Vec3> pred_points, std::span<const Vec3> gt_points,
                           std::span<const double> pred_depth, std::span<const double> gt_depth);

/// Mean over `from` of the Euclidean distance to the nearest point of `to`.
double mean_nearest_distance(std::span<const Vec3> from, std::span<const Vec3> to);

} // namespace splatvox

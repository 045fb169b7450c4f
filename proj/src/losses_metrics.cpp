// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/losses_metrics.hpp"

#include "splatvox/error.hpp"
#include "splatvox/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splatvox {

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

bool selected(std::span<const std::uint8_t> mask, std::size_t v) {
    return mask.empty() || mask[v] != 0;
}

void check_mask(std::span<const std::uint8_t> mask, std::size_t voxels) {
    if (!mask.empty() && mask.size() != voxels)
        throw InvalidInput("mask size does not match the grid");
}

} // namespace

FocalLossResult focal_loss(const SemanticProbGrid& pred, const LabelGrid& gt, double gamma,
                           std::span<const double> class_weights,
                           std::span<const std::uint8_t> mask) {
    const std::size_t voxels = pred.voxel_count();
    const std::size_t classes = pred.num_classes();
    if (gt.labels.size() != voxels)
        throw InvalidInput("prediction and ground truth sizes differ");
    if (class_weights.size() != classes)
        throw InvalidInput("class weight vector must have one entry per class");
    if (!(gamma >= 0.0))
        throw InvalidInput("focal gamma must be non-negative");
    check_mask(mask, voxels);

    FocalLossResult result;
    double total = 0.0;
    for (std::size_t v = 0; v < voxels; ++v) {
        if (!selected(mask, v))
            continue;
        const std::size_t c = gt.labels[v];
        if (c >= classes)
            throw InvalidInput("ground-truth label out of range");
        const double p = clamp_prob(pred.voxel(v)[c]);
        total += -class_weights[c] * std::pow(1.0 - p, gamma) * std::log(p);
        ++result.voxels;
    }
    if (result.voxels == 0) {
        result.empty_mask = true;
        return result;
    }
    result.value = total / static_cast<double>(result.voxels);
    return result;
}

ScalGeoResult scal_geo_loss(std::span<const double> occ, std::span<const std::uint8_t> gt) {
    if (occ.size() != gt.size())
        throw InvalidInput("occupancy and ground truth sizes differ");

    double tp = 0.0, pred_sum = 0.0, pos = 0.0, tn = 0.0, neg = 0.0;
    for (std::size_t v = 0; v < occ.size(); ++v) {
        const double p = occ[v];
        const double y = gt[v] != 0 ? 1.0 : 0.0;
        tp += p * y;
        pred_sum += p;
        pos += y;
        tn += (1.0 - p) * (1.0 - y);
        neg += 1.0 - y;
    }

    ScalGeoResult r;
    auto term = [](double value) { return std::log(std::max(value, kProbClamp)); };
    r.precision_skipped = pos == 0.0 || pred_sum == 0.0;
    r.recall_skipped = pos == 0.0;
    r.specificity_skipped = neg == 0.0;
    if (!r.precision_skipped) {
        r.precision = tp / pred_sum;
        r.loss -= term(r.precision);
    }
    if (!r.recall_skipped) {
        r.recall = tp / pos;
        r.loss -= term(r.recall);
    }
    if (!r.specificity_skipped) {
        r.specificity = tn / neg;
        r.loss -= term(r.specificity);
    }
    return r;
}

std::vector<double> prob_scale_weights(std::size_t layers) {
    if (layers == 0)
        throw InvalidInput("at least one layer is required");
    std::vector<double> w(layers, 1.0);
    const double n = static_cast<double>(layers);
    for (std::size_t i = 1; i < layers; ++i)
        w[i - 1] = 0.5 * (static_cast<double>(i) / n);
    return w;
}

double prob_scale_loss_from_layers(std::span<const double> layer_losses) {
    const auto w = prob_scale_weights(layer_losses.size());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < layer_losses.size(); ++i)
        total += w[i] * layer_losses[i];
    return total + layer_losses.back();
}

double prob_scale_loss(const LayerOccupancies& input) {
    if (input.layers.empty())
        throw InvalidInput("at least one layer is required");
    std::vector<double> losses;
    losses.reserve(input.layers.size());
    for (const auto& layer : input.layers) {
        if (layer.size() != input.gt.size())
            throw InvalidInput("layer occupancy size differs from the ground truth");
        losses.push_back(scal_geo_loss(layer, input.gt).loss);
    }
    return prob_scale_loss_from_layers(losses);
}

IouResult iou_miou(const LabelGrid& pred, const LabelGrid& gt, std::size_t num_classes,
                   std::span<const std::uint8_t> mask) {
    const std::size_t voxels = gt.labels.size();
    if (pred.labels.size() != voxels)
        throw InvalidInput("prediction and ground truth sizes differ");
    if (num_classes < 2)
        throw InvalidInput("num_classes must be at least 2");
    check_mask(mask, voxels);

    std::size_t geo_tp = 0, geo_fp = 0, geo_fn = 0;
    std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
    IouResult r;
    for (std::size_t v = 0; v < voxels; ++v) {
        if (!selected(mask, v))
            continue;
        const std::size_t p = pred.labels[v];
        const std::size_t g = gt.labels[v];
        if (p >= num_classes || g >= num_classes)
            throw InvalidInput("label out of range");
        ++r.evaluated_voxels;
        const bool po = p != 0, go = g != 0;
        geo_tp += po && go;
        geo_fp += po && !go;
        geo_fn += !po && go;
        if (p == g) {
            ++tp[p];
        } else {
            ++fp[p];
            ++fn[g];
        }
    }
    if (r.evaluated_voxels == 0)
        throw InvalidInput("mask selects no voxels");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::size_t geo_union = geo_tp + geo_fp + geo_fn;
    r.iou = geo_union == 0 ? nan : static_cast<double>(geo_tp) / static_cast<double>(geo_union);

    r.per_class.assign(num_classes - 1, nan);
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 1; c < num_classes; ++c) {
        const std::size_t uni = tp[c] + fp[c] + fn[c];
        if (uni == 0)
            continue;
        r.per_class[c - 1] = static_cast<double>(tp[c]) / static_cast<double>(uni);
        sum += r.per_class[c - 1];
        ++present;
    }
    r.miou = present == 0 ? nan : sum / static_cast<double>(present);
    return r;
}

double mean_nearest_distance(std::span<const Vec3> from, std::span<const Vec3> to) {
    if (from.empty() || to.empty())
        throw InvalidInput("point sets must be non-empty");
    std::vector<double> xs(to.size()), ys(to.size()), zs(to.size());
    for (std::size_t i = 0; i < to.size(); ++i) {
        xs[i] = to[i].x();
        ys[i] = to[i].y();
        zs[i] = to[i].z();
    }
    const auto nearest = simd::active_kernels().nearest_sq_distance;
    double total = 0.0;
    for (const Vec3& p : from)
        total += std::sqrt(nearest(xs.data(), ys.data(), zs.data(), to.size(), p.x(), p.y(), p.z()));
    return total / static_cast<double>(from.size());
}

DepthMetrics depth_metrics(std::span<const Vec3> pred_points, std::span<const Vec3> gt_points,
                           std::span<const double> pred_depth, std::span<const double> gt_depth) {
    if (pred_depth.size() != gt_depth.size())
        throw InvalidInput("depth lists must be aligned");
    if (pred_depth.empty())
        throw InvalidInput("depth lists must be non-empty");

    DepthMetrics m;
    double sq = 0.0;
    std::size_t within = 0, ratio_pairs = 0;
    for (std::size_t i = 0; i < pred_depth.size(); ++i) {
        const double d = gt_depth[i];
        const double e = pred_depth[i];
        sq += (d - e) * (d - e);
        if (!(d > 0.0) || !(e > 0.0)) {
            ++m.excluded_pairs;
            continue;
        }
        ++ratio_pairs;
        if (std::max(d / e, e / d) < kDelta1Threshold)
            ++within;
    }
    m.rmse = std::sqrt(sq / static_cast<double>(pred_depth.size()));
    m.delta1 = ratio_pairs == 0 ? std::numeric_limits<double>::quiet_NaN()
                                : static_cast<double>(within) / static_cast<double>(ratio_pairs);
    m.chamfer_l1 = 0.5 * (mean_nearest_distance(pred_points, gt_points) +
                          mean_nearest_distance(gt_points, pred_points));
    return m;
}

} // namespace splatvox

// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatvox/depth_init.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace splatvox {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    /// Entries uniform in [-bound, bound].
    static Matrix random(std::size_t r, std::size_t c, double bound, std::uint64_t seed);
};

/// H x W x D feature image, channel fastest.
struct FeatureMap {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t channels = 0;
    std::vector<double> data;

    double at(std::uint32_t y, std::uint32_t x, std::uint32_t c) const {
        return data[(std::size_t{y} * width + x) * channels + c];
    }
};

/// Bilinear samples at (u (W - 1), v (H - 1)), clamped to the border.
/// Returns N x D. Throws InvalidInput on empty dims.
Matrix sample_bilinear(const FeatureMap& map, const ReferenceGrid& pts);

/// Sampled depth features (N x D) and one N x D image feature matrix per scale.
struct FeatureSet {
    Matrix depth;
    std::vector<Matrix> image_scales;

    std::size_t points() const { return depth.rows; }
    std::size_t dim() const { return depth.cols; }
    std::size_t scales() const { return image_scales.size(); }
};

/// Projections for group cross-attention. w_a (length D / G) is shared by
/// every group and scale.
struct GcaWeights {
    Matrix w_q;
    Matrix w_k;
    Matrix w_v;
    std::vector<double> w_a;
    Matrix w_o;
    std::size_t groups = 1;

    std::size_t dim() const { return w_q.rows; }
    std::size_t group_dim() const { return groups == 0 ? 0 : dim() / groups; }

    /// Throws InvalidInput on shape disagreement or non-finite entries.
    void validate() const;

    /// Entries uniform in [-1/sqrt(D), 1/sqrt(D)].
    static GcaWeights random(std::size_t dim, std::size_t groups, std::uint64_t seed);
};

struct GcaOutput {
    Matrix features;               ///< N x D
    std::vector<double> attention; ///< N x G x L scale weights, L fastest
};

/// Blocked, SIMD-dispatched forward pass. For every point and group the
/// scale scores w_a . (Q_g + K_g^l) are softmax-normalized over l (no
/// temperature), the group output is sum_l A_g^l V_g^l, and the concatenated
/// groups are projected by w_o.
GcaOutput gca_forward_with_attention(const FeatureSet& feats, const GcaWeights& w);
Matrix gca_forward(const FeatureSet& feats, const GcaWeights& w);

/// Straight loop transcription of the same computation, no blocking and no
/// SIMD. Used as the oracle for gca_forward.
GcaOutput gca_reference(const FeatureSet& feats, const GcaWeights& w);

enum class Activation { Gelu, Relu };

struct FfnConfig {
    Activation activation = Activation::Gelu;
    bool residual = true;
};

struct FfnWeights {
    Matrix w1;              ///< D x H (H = 4D by default)
    std::vector<double> b1; ///< H
    Matrix w2;              ///< H x D
    std::vector<double> b2; ///< D

    static FfnWeights random(std::size_t dim, std::size_t hidden, std::uint64_t seed);
    static FfnWeights zeros(std::size_t dim, std::size_t hidden);
};

/// Exact GELU: 0.5 x (1 + erf(x / sqrt 2)).
double gelu(double x);

/// Point-wise act(x w1 + b1) w2 + b2, plus x when config.residual is set.
Matrix ffn_forward(const Matrix& x, const FfnWeights& w, const FfnConfig& config = {});

struct GmfConfig {
    bool gca_residual = false; ///< add the depth features back after attention
    FfnConfig ffn;
};

/// Attention followed by the point-wise FFN.
Matrix gmf_forward(const FeatureSet& feats, const GcaWeights& gca, const FfnWeights& ffn,
                   const GmfConfig& config = {});

/// Conventional dot-product cross-attention over all N keys per scale
/// (cost quadratic in N). Only a timing comparator.
Matrix dense_cross_attention(const FeatureSet& feats, const GcaWeights& w);

/// Random depth and image features with entries uniform in [-1, 1].
FeatureSet random_features(std::size_t points, std::size_t dim, std::size_t scales,
                           std::uint64_t seed);

enum class BenchKernel { Gca, Dense };

struct BenchRow {
    std::size_t points = 0;
    double seconds = 0.0; ///< best of the repeats
};

struct ComplexityReport {
    std::vector<BenchRow> rows;
    double slope = 0.0; ///< least-squares slope of log(seconds) vs log(points)
};

/// Least-squares slope of log(y) against log(x). Throws InvalidInput with
/// fewer than two points or non-positive values.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Times the chosen kernel single-threaded for each N (best of `repeats`).
ComplexityReport complexity_bench(std::span<const std::size_t> points, std::size_t dim,
                                  std::size_t scales, std::size_t groups, int repeats = 3,
                                  BenchKernel kernel = BenchKernel::Gca, std::uint64_t seed = 1);

} // namespace splatvox

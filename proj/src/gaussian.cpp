// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/gaussian.hpp"

#include "splatvox/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace splatvox {

namespace {

constexpr double kUnitNormTolerance = 1e-6;

bool finite(const Vec3& v) { return v.allFinite(); }

} // namespace

Quat normalized_rotation(const Quat& q) {
    const double n2 = q.squared_norm();
    if (!std::isfinite(n2) || n2 == 0.0)
        throw InvalidInput("quaternion has zero or non-finite norm");
    const double n = std::sqrt(n2);
    if (std::abs(n - 1.0) > kUnitNormTolerance)
        throw InvalidInput("quaternion norm deviates from 1 by more than 1e-6");
    // Already unit to rounding: keep the exact bits.
    if (std::abs(n2 - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon())
        return q;
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Mat3 quat_to_rotation(const Quat& q_in) {
    const Quat q = normalized_rotation(q_in);
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

Mat3 covariance(const Vec3& scale, const Quat& rotation) {
    if (!finite(scale) || (scale.array() <= 0.0).any())
        throw InvalidInput("scale components must be finite and positive");
    const Mat3 r = quat_to_rotation(rotation);
    const Mat3 rs = r * scale.asDiagonal();
    Mat3 cov = rs * rs.transpose();
    // Exact symmetry.
    cov = 0.5 * (cov + cov.transpose()).eval();
    return cov;
}

std::vector<double> normalized_semantics(std::span<const double> logits) {
    if (logits.empty())
        throw InvalidInput("semantic logits must be non-empty");
    double top = -std::numeric_limits<double>::infinity();
    for (double v : logits) {
        if (!std::isfinite(v))
            throw InvalidInput("semantic logits must be finite");
        top = std::max(top, v);
    }
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - top);
        total += out[i];
    }
    for (double& v : out)
        v /= total;
    return out;
}

GaussianPrimitive::GaussianPrimitive(const Vec3& mean, const Vec3& scale, const Quat& rotation,
                                     double opacity, std::vector<double> semantic_logits)
    : mean_(mean),
      scale_(scale),
      rotation_(normalized_rotation(rotation)),
      opacity_(opacity),
      logits_(std::move(semantic_logits)) {
    if (!finite(mean_))
        throw InvalidInput("primitive mean must be finite");
    if (!(opacity_ >= 0.0 && opacity_ <= 1.0))
        throw InvalidInput("opacity must lie in [0, 1]");

    cov_ = covariance(scale_, rotation_);

    // Sigma^{-1} = R S^{-2} R^T, formed directly instead of inverting cov_.
    const Mat3 r = quat_to_rotation(rotation_);
    const Vec3 inv_s2 = scale_.array().square().inverse();
    inv_cov_ = r * inv_s2.asDiagonal() * r.transpose();
    inv_cov_ = 0.5 * (inv_cov_ + inv_cov_.transpose()).eval();

    // |Sigma|^{1/2} = s1 s2 s3
    const double sqrt_det = scale_.prod();
    pdf_peak_ = 1.0 / (std::pow(2.0 * std::numbers::pi, 1.5) * sqrt_det);

    weights_ = normalized_semantics(logits_);
}

double GaussianPrimitive::mahalanobis_sq(const Vec3& x) const {
    const Vec3 d = x - mean_;
    return d.dot(inv_cov_ * d);
}

GaussianPrimitive GaussianPrimitive::with_opacity(double opacity) const {
    if (!(opacity >= 0.0 && opacity <= 1.0))
        throw InvalidInput("opacity must lie in [0, 1]");
    GaussianPrimitive copy = *this;
    copy.opacity_ = opacity;
    return copy;
}

double gaussian_kernel(const Vec3& x, const GaussianPrimitive& g) {
    return std::exp(-0.5 * g.mahalanobis_sq(x));
}

double gaussian_pdf(const Vec3& x, const GaussianPrimitive& g) {
    return gaussian_kernel(x, g) * g.pdf_peak();
}

} // namespace splatvox

// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace splatvox {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Quaternion stored scalar-first as (w, x, y, z).
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static Quat identity() { return {}; }
    double squared_norm() const { return w * w + x * x + y * y + z * z; }
};

/// Returns q scaled to unit norm. Inputs whose norm is farther than 1e-6
/// from one are rejected, as is the zero quaternion. A quaternion that is
/// already unit to rounding precision is returned unchanged so that file
/// round-trips stay bit-exact.
Quat normalized_rotation(const Quat& q);

/// Rotation matrix of a unit quaternion. Throws InvalidInput on a zero or
/// far-from-unit quaternion.
Mat3 quat_to_rotation(const Quat& q);

/// R diag(s)^2 R^T. Throws InvalidInput unless every scale component is
/// finite and strictly positive.
Mat3 covariance(const Vec3& scale, const Quat& rotation);

/// Softmax with max-shift. Throws InvalidInput on non-finite logits or an
/// empty vector.
std::vector<double> normalized_semantics(std::span<const double> logits);

/// An anisotropic 3D Gaussian with opacity and semantic logits.
///
/// Construction validates and normalizes the parameters and caches the
/// quantities every aggregator needs: the inverse covariance, the pdf
/// normalization 1 / ((2 pi)^{3/2} |Sigma|^{1/2}) and the softmax of the
/// logits. Instances are immutable.
class GaussianPrimitive {
public:
    GaussianPrimitive(const Vec3& mean, const Vec3& scale, const Quat& rotation,
                      double opacity, std::vector<double> semantic_logits);

    const Vec3& mean() const { return mean_; }
    const Vec3& scale() const { return scale_; }
    const Quat& rotation() const { return rotation_; }
    double opacity() const { return opacity_; }
    const std::vector<double>& semantic_logits() const { return logits_; }

    /// Number of valid (non-empty) classes, i.e. C - 1.
    std::size_t num_semantic() const { return logits_.size(); }

    const Mat3& cov() const { return cov_; }
    const Mat3& inv_cov() const { return inv_cov_; }
    /// Value of the pdf at the mean.
    double pdf_peak() const { return pdf_peak_; }
    const std::vector<double>& semantic_weights() const { return weights_; }
    double max_scale() const { return scale_.maxCoeff(); }

    /// (x - mu)^T Sigma^{-1} (x - mu)
    double mahalanobis_sq(const Vec3& x) const;

    /// Copy with a different opacity; geometry caches are reused.
    GaussianPrimitive with_opacity(double opacity) const;

private:
    Vec3 mean_;
    Vec3 scale_;
    Quat rotation_;
    double opacity_;
    std::vector<double> logits_;

    Mat3 cov_;
    Mat3 inv_cov_;
    double pdf_peak_;
    std::vector<double> weights_;
};

using GaussianSet = std::vector<GaussianPrimitive>;

/// exp(-0.5 (x - mu)^T Sigma^{-1} (x - mu)), in (0, 1].
double gaussian_kernel(const Vec3& x, const GaussianPrimitive& g);

/// Normalized density; equals gaussian_kernel(x, g) * g.pdf_peak().
double gaussian_pdf(const Vec3& x, const GaussianPrimitive& g);

} // namespace splatvox

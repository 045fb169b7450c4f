// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/gmf_attention.hpp"

#include "splatvox/error.hpp"
#include "splatvox/rng.hpp"
#include "splatvox/simd/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace splatvox {

namespace {

// Rows of the point dimension processed together by the blocked forward pass.
constexpr std::size_t kRowBlock = 64;

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
    if (m.rows != rows || m.cols != cols || m.data.size() != rows * cols)
        throw InvalidInput(std::string(name) + " has shape " + std::to_string(m.rows) + "x" +
                           std::to_string(m.cols) + ", expected " + std::to_string(rows) + "x" +
                           std::to_string(cols));
}

void validate_features(const FeatureSet& feats, const GcaWeights& w) {
    w.validate();
    const std::size_t d = w.dim();
    if (feats.image_scales.empty())
        throw InvalidInput("at least one image scale is required");
    require_shape(feats.depth, feats.points(), d, "depth features");
    for (const auto& m : feats.image_scales)
        require_shape(m, feats.points(), d, "image features");
}

// In-place softmax of `scores` (length L).
void softmax(std::span<double> scores) {
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double& s : scores) {
        s = std::exp(s - top);
        total += s;
    }
    for (double& s : scores)
        s /= total;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    simd::active_kernels().gemm(a.data.data(), b.data.data(), c.data.data(), a.rows, a.cols,
                                b.cols);
    return c;
}

} // namespace

Matrix Matrix::random(std::size_t r, std::size_t c, double bound, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (double& v : m.data)
        v = rng.uniform(-bound, bound);
    return m;
}

Matrix sample_bilinear(const FeatureMap& map, const ReferenceGrid& pts) {
    if (map.height == 0 || map.width == 0 || map.channels == 0)
        throw InvalidInput("feature map dims must be positive");
    if (map.data.size() != std::size_t{map.height} * map.width * map.channels)
        throw InvalidInput("feature map payload does not match its dims");

    Matrix out(pts.points.size(), map.channels);
    const double max_x = map.width - 1.0;
    const double max_y = map.height - 1.0;
    for (std::size_t n = 0; n < pts.points.size(); ++n) {
        const double x = std::clamp(pts.points[n][0] * max_x, 0.0, max_x);
        const double y = std::clamp(pts.points[n][1] * max_y, 0.0, max_y);
        const auto x0 = static_cast<std::uint32_t>(std::floor(x));
        const auto y0 = static_cast<std::uint32_t>(std::floor(y));
        const std::uint32_t x1 = std::min(x0 + 1, map.width - 1);
        const std::uint32_t y1 = std::min(y0 + 1, map.height - 1);
        const double tx = x - x0;
        const double ty = y - y0;
        for (std::uint32_t c = 0; c < map.channels; ++c) {
            const double top = (1.0 - tx) * map.at(y0, x0, c) + tx * map.at(y0, x1, c);
            const double bottom = (1.0 - tx) * map.at(y1, x0, c) + tx * map.at(y1, x1, c);
            out(n, c) = (1.0 - ty) * top + ty * bottom;
        }
    }
    return out;
}

void GcaWeights::validate() const {
    const std::size_t d = dim();
    if (d == 0)
        throw InvalidInput("feature dimension must be positive");
    if (groups == 0 || d % groups != 0)
        throw InvalidInput("feature dimension must be divisible by the group count");
    require_shape(w_q, d, d, "w_q");
    require_shape(w_k, d, d, "w_k");
    require_shape(w_v, d, d, "w_v");
    require_shape(w_o, d, d, "w_o");
    if (w_a.size() != group_dim())
        throw InvalidInput("w_a must have length D / G");
    if (!all_finite(w_q.data) || !all_finite(w_k.data) || !all_finite(w_v.data) ||
        !all_finite(w_o.data) || !all_finite(w_a))
        throw InvalidInput("weights must be finite");
}

GcaWeights GcaWeights::random(std::size_t dim, std::size_t groups, std::uint64_t seed) {
    if (dim == 0 || groups == 0 || dim % groups != 0)
        throw InvalidInput("dim must be a positive multiple of groups");
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    Rng rng(seed);
    GcaWeights w;
    w.groups = groups;
    w.w_q = Matrix::random(dim, dim, bound, rng.next());
    w.w_k = Matrix::random(dim, dim, bound, rng.next());
    w.w_v = Matrix::random(dim, dim, bound, rng.next());
    w.w_o = Matrix::random(dim, dim, bound, rng.next());
    w.w_a.resize(dim / groups);
    for (double& v : w.w_a)
        v = rng.uniform(-bound, bound);
    return w;
}

GcaOutput gca_forward_with_attention(const FeatureSet& feats, const GcaWeights& w) {
    validate_features(feats, w);
    const std::size_t n_pts = feats.points();
    const std::size_t d = w.dim();
    const std::size_t g_count = w.groups;
    const std::size_t dg = w.group_dim();
    const std::size_t l_count = feats.scales();
    const auto& gemm = simd::active_kernels().gemm;

    GcaOutput out;
    out.features = Matrix(n_pts, d);
    out.attention.assign(n_pts * g_count * l_count, 0.0);

    std::vector<double> q(kRowBlock * d), k(kRowBlock * d), v(l_count * kRowBlock * d);
    std::vector<double> scores(kRowBlock * g_count * l_count), fused(kRowBlock * d);

    for (std::size_t r0 = 0; r0 < n_pts; r0 += kRowBlock) {
        const std::size_t rows = std::min(kRowBlock, n_pts - r0);
        gemm(feats.depth.data.data() + r0 * d, w.w_q.data.data(), q.data(), rows, d, d);

        for (std::size_t l = 0; l < l_count; ++l) {
            const double* src = feats.image_scales[l].data.data() + r0 * d;
            gemm(src, w.w_k.data.data(), k.data(), rows, d, d);
            gemm(src, w.w_v.data.data(), v.data() + l * kRowBlock * d, rows, d, d);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t g = 0; g < g_count; ++g) {
                    const double* qg = q.data() + r * d + g * dg;
                    const double* kg = k.data() + r * d + g * dg;
                    double s = 0.0;
                    for (std::size_t c = 0; c < dg; ++c)
                        s += w.w_a[c] * (qg[c] + kg[c]);
                    scores[(r * g_count + g) * l_count + l] = s;
                }
            }
        }

        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t g = 0; g < g_count; ++g) {
                std::span<double> a{scores.data() + (r * g_count + g) * l_count, l_count};
                softmax(a);
                double* dst = fused.data() + r * d + g * dg;
                std::fill(dst, dst + dg, 0.0);
                for (std::size_t l = 0; l < l_count; ++l) {
                    const double* vg = v.data() + l * kRowBlock * d + r * d + g * dg;
                    for (std::size_t c = 0; c < dg; ++c)
                        dst[c] += a[l] * vg[c];
                }
            }
        }
        std::copy_n(scores.data(), rows * g_count * l_count,
                    out.attention.data() + r0 * g_count * l_count);
        gemm(fused.data(), w.w_o.data.data(), out.features.data.data() + r0 * d, rows, d, d);
    }
    return out;
}

Matrix gca_forward(const FeatureSet& feats, const GcaWeights& w) {
    return gca_forward_with_attention(feats, w).features;
}

GcaOutput gca_reference(const FeatureSet& feats, const GcaWeights& w) {
    validate_features(feats, w);
    const std::size_t n_pts = feats.points();
    const std::size_t d = w.dim();
    const std::size_t g_count = w.groups;
    const std::size_t dg = w.group_dim();
    const std::size_t l_count = feats.scales();

    auto project = [&](const Matrix& x, const Matrix& m) {
        Matrix y(x.rows, m.cols);
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < x.cols; ++c)
                    s += x(i, c) * m(c, j);
                y(i, j) = s;
            }
        return y;
    };

    const Matrix q = project(feats.depth, w.w_q);
    std::vector<Matrix> keys, values;
    for (const auto& f : feats.image_scales) {
        keys.push_back(project(f, w.w_k));
        values.push_back(project(f, w.w_v));
    }

    GcaOutput out;
    out.attention.assign(n_pts * g_count * l_count, 0.0);
    Matrix fused(n_pts, d);
    for (std::size_t n = 0; n < n_pts; ++n) {
        for (std::size_t g = 0; g < g_count; ++g) {
            std::vector<double> logits(l_count);
            for (std::size_t l = 0; l < l_count; ++l) {
                double s = 0.0;
                for (std::size_t c = 0; c < dg; ++c)
                    s += w.w_a[c] * (q(n, g * dg + c) + keys[l](n, g * dg + c));
                logits[l] = s;
            }
            const double top = *std::max_element(logits.begin(), logits.end());
            double total = 0.0;
            for (std::size_t l = 0; l < l_count; ++l)
                total += std::exp(logits[l] - top);
            for (std::size_t l = 0; l < l_count; ++l) {
                const double a = std::exp(logits[l] - top) / total;
                out.attention[(n * g_count + g) * l_count + l] = a;
                for (std::size_t c = 0; c < dg; ++c)
                    fused(n, g * dg + c) += a * values[l](n, g * dg + c);
            }
        }
    }
    out.features = project(fused, w.w_o);
    return out;
}

FfnWeights FfnWeights::random(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    Rng rng(seed);
    FfnWeights w;
    w.w1 = Matrix::random(dim, hidden, bound, rng.next());
    w.w2 = Matrix::random(hidden, dim, bound, rng.next());
    w.b1.resize(hidden);
    w.b2.resize(dim);
    for (double& v : w.b1)
        v = rng.uniform(-bound, bound);
    for (double& v : w.b2)
        v = rng.uniform(-bound, bound);
    return w;
}

FfnWeights FfnWeights::zeros(std::size_t dim, std::size_t hidden) {
    FfnWeights w;
    w.w1 = Matrix(dim, hidden);
    w.w2 = Matrix(hidden, dim);
    w.b1.assign(hidden, 0.0);
    w.b2.assign(dim, 0.0);
    return w;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

Matrix ffn_forward(const Matrix& x, const FfnWeights& w, const FfnConfig& config) {
    const std::size_t d = x.cols;
    const std::size_t hidden = w.w1.cols;
    require_shape(x, x.rows, d, "ffn input");
    require_shape(w.w1, d, hidden, "w1");
    require_shape(w.w2, hidden, d, "w2");
    if (w.b1.size() != hidden || w.b2.size() != d)
        throw InvalidInput("ffn bias lengths do not match the weights");

    Matrix h = matmul(x, w.w1);
    for (std::size_t i = 0; i < h.rows; ++i) {
        auto row = h.row(i);
        for (std::size_t j = 0; j < hidden; ++j) {
            const double pre = row[j] + w.b1[j];
            row[j] = config.activation == Activation::Gelu ? gelu(pre) : std::max(pre, 0.0);
        }
    }
    Matrix y = matmul(h, w.w2);
    for (std::size_t i = 0; i < y.rows; ++i)
        for (std::size_t j = 0; j < d; ++j)
            y(i, j) += w.b2[j] + (config.residual ? x(i, j) : 0.0);
    return y;
}

Matrix gmf_forward(const FeatureSet& feats, const GcaWeights& gca, const FfnWeights& ffn,
                   const GmfConfig& config) {
    Matrix fused = gca_forward(feats, gca);
    if (config.gca_residual)
        for (std::size_t i = 0; i < fused.data.size(); ++i)
            fused.data[i] += feats.depth.data[i];
    return ffn_forward(fused, ffn, config.ffn);
}

Matrix dense_cross_attention(const FeatureSet& feats, const GcaWeights& w) {
    validate_features(feats, w);
    const std::size_t n_pts = feats.points();
    const std::size_t d = w.dim();
    const double temperature = 1.0 / std::sqrt(static_cast<double>(d));

    const Matrix q = matmul(feats.depth, w.w_q);
    Matrix fused(n_pts, d);
    std::vector<double> scores(n_pts);
    for (const auto& f : feats.image_scales) {
        const Matrix k = matmul(f, w.w_k);
        const Matrix v = matmul(f, w.w_v);
        for (std::size_t i = 0; i < n_pts; ++i) {
            for (std::size_t j = 0; j < n_pts; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < d; ++c)
                    s += q(i, c) * k(j, c);
                scores[j] = s * temperature;
            }
            softmax(scores);
            auto dst = fused.row(i);
            for (std::size_t j = 0; j < n_pts; ++j)
                for (std::size_t c = 0; c < d; ++c)
                    dst[c] += scores[j] * v(j, c);
        }
    }
    return matmul(fused, w.w_o);
}

FeatureSet random_features(std::size_t points, std::size_t dim, std::size_t scales,
                           std::uint64_t seed) {
    Rng rng(seed);
    FeatureSet feats;
    feats.depth = Matrix::random(points, dim, 1.0, rng.next());
    for (std::size_t l = 0; l < scales; ++l)
        feats.image_scales.push_back(Matrix::random(points, dim, 1.0, rng.next()));
    return feats;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidInput("slope fit needs at least two paired samples");
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw InvalidInput("slope fit needs positive samples");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0)
        throw InvalidInput("slope fit needs distinct x values");
    return sxy / sxx;
}

ComplexityReport complexity_bench(std::span<const std::size_t> points, std::size_t dim,
                                  std::size_t scales, std::size_t groups, int repeats,
                                  BenchKernel kernel, std::uint64_t seed) {
    if (points.empty())
        throw InvalidInput("no sizes to benchmark");
    const GcaWeights w = GcaWeights::random(dim, groups, seed);
    ComplexityReport report;
    std::vector<double> xs, ys;
    for (std::size_t n : points) {
        const FeatureSet feats = random_features(n, dim, scales, seed + n);
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < std::max(1, repeats); ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const Matrix out =
                kernel == BenchKernel::Gca ? gca_forward(feats, w) : dense_cross_attention(feats, w);
            const auto t1 = std::chrono::steady_clock::now();
            // Keep the result observable.
            if (!std::isfinite(out.data.empty() ? 0.0 : out.data.front()))
                throw InvalidInput("non-finite benchmark output");
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        }
        report.rows.push_back({n, best});
        xs.push_back(static_cast<double>(n));
        ys.push_back(best);
    }
    report.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : 0.0;
    return report;
}

} // namespace splatvox

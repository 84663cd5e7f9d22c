#pragma once

#include "holosplat/geometry.hpp"
#include "holosplat/point_cloud.hpp"
#include "holosplat/sh.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace holosplat {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Struct-of-arrays scene representation. Parameters are stored
/// unconstrained (log-scale, opacity logit) and activated on read.
struct GaussianSet {
    std::vector<Vec3> centers;                      // world, meters
    std::vector<Vec3> log_scales;                   // scale = exp(log_scale)
    std::vector<Eigen::Vector4d> rotations;         // quaternion (w,x,y,z)
    std::vector<double> opacity_logits;
    std::vector<Vec3> sh_coeffs;                    // N * basis_size(deg) triples
    int sh_degree = 0;

    std::size_t size() const { return centers.size(); }
    int sh_basis() const { return sh_basis_size(sh_degree); }
    const Vec3* sh_of(std::size_t i) const { return &sh_coeffs[i * sh_basis()]; }
    Vec3* sh_of(std::size_t i) { return &sh_coeffs[i * sh_basis()]; }
    double opacity(std::size_t i) const { return sigmoid(opacity_logits[i]); }
    Vec3 scale(std::size_t i) const { return log_scales[i].array().exp(); }

    void resize(std::size_t n) {
        centers.resize(n);
        log_scales.resize(n);
        rotations.resize(n);
        opacity_logits.resize(n);
        sh_coeffs.resize(n * sh_basis());
    }
    void normalize_rotations() {
        for (auto& q : rotations) q.normalize();
    }
};

/// Rotation matrix from a (w,x,y,z) quaternion, normalizing first.
Mat3 quat_to_rotation(const Eigen::Vector4d& q);

/// d(R)/d(q_k) for the normalized-quaternion rotation above, k = 0..3,
/// including the normalization Jacobian. Used by the backward pass.
std::array<Mat3, 4> quat_to_rotation_jacobian(const Eigen::Vector4d& q);

/// Sigma = R * S * S^T * R^T with S = diag(exp(log_scale)). Symmetric PSD.
Mat3 covariance_3d(const Vec3& log_scale, const Eigen::Vector4d& rotation);

/// Isotropic Gaussians at the cloud positions; per-axis scale equals the
/// mean distance to the 3 nearest neighbors (self excluded, ties by lowest
/// index); opacity 0.1; degree-0 SH from point color (mid-gray when the
/// cloud is uncolored). Throws when the cloud has fewer than 4 points.
GaussianSet init_from_cloud(const PointCloud& cloud, int sh_degree);

/// Centers of Gaussians with opacity >= prune_opacity, colored by the
/// degree-0 SH term.
PointCloud extract_centers(const GaussianSet& g, double prune_opacity);

} // namespace holosplat

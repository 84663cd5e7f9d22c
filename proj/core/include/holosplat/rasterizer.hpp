#pragma once

#include "holosplat/gaussians.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace holosplat {

/// Screen-space footprint of one projected Gaussian.
struct Splat2D {
    Vec2 mean2d;
    Mat2 cov2d;        // dilated, pixels^2
    double depth = 0;  // camera z of the center
    Vec3 color;
    double opacity = 0;
};

/// Per-splat projection intermediates plus per-pixel contributor lists,
/// retained by the forward pass for the backward pass.
struct RenderAux;

struct RenderOutput {
    int width = 0, height = 0;
    std::vector<Vec3> image;     // row-major, [0,1]
    std::vector<double> alpha;   // accumulated opacity, [0,1]
    std::vector<double> depth;   // center depth of the most-opaque contributor, 0 = none
    std::shared_ptr<const RenderAux> aux;

    const Vec3& at(int row, int col) const { return image[std::size_t(row) * width + col]; }
};

/// Gradients of a scalar loss w.r.t. every GaussianSet parameter array,
/// plus the densification signal.
struct RenderGrads {
    std::vector<Vec3> centers;
    std::vector<Vec3> log_scales;
    std::vector<Eigen::Vector4d> rotations;
    std::vector<double> opacity_logits;
    std::vector<Vec3> sh_coeffs;
    // screen-space positional gradient per Gaussian, accumulated over pixels
    std::vector<Vec2> screen_position;
    // largest 3-sigma screen footprint radius seen this view, px (0 if culled)
    std::vector<double> screen_radius;
};

/// EWA-style projection of one Gaussian. nullopt when culled (behind the
/// near plane, degenerate footprint, or 3-sigma extent off screen).
std::optional<Splat2D> project_gaussian(const Vec3& center, const Vec3& log_scale,
                                        const Eigen::Vector4d& rotation, double opacity_logit,
                                        const Vec3* sh, int sh_degree, const Pose& pose,
                                        const CameraIntrinsics& k);

/// Forward render: global front-to-back depth sort (ties by Gaussian index),
/// alpha compositing with the configured clamps. Deterministic and
/// bit-identical across thread counts.
RenderOutput render(const GaussianSet& g, const Pose& pose, const CameraIntrinsics& k,
                    const Vec3& background);

/// Analytic gradients of sum(dL_dimage . image) w.r.t. all parameters.
/// Requires the aux of a forward pass over the same inputs.
RenderGrads render_backward(const GaussianSet& g, const Pose& pose, const CameraIntrinsics& k,
                            const Vec3& background, const RenderOutput& forward,
                            const std::vector<Vec3>& dL_dimage);

} // namespace holosplat

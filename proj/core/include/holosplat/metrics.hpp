#pragma once

#include "holosplat/image.hpp"
#include "holosplat/point_cloud.hpp"

#include <limits>
#include <vector>

namespace holosplat {

/// 10*log10(peak^2 / MSE) over all pixels and channels. Identical images
/// yield +infinity.
double psnr(const Image& a, const Image& b, double peak = 1.0);

/// Mean local SSIM, 11x11 Gaussian window sigma=1.5, C1=(0.01*peak)^2,
/// C2=(0.03*peak)^2, channel-averaged, evaluated on the valid (fully
/// overlapped) window positions. Throws when the image is smaller than
/// the window.
double ssim(const Image& a, const Image& b, double peak = 1.0);

/// (1 - SSIM) / 2.
double dssim(const Image& a, const Image& b, double peak = 1.0);

/// d(ssim)/d(a) per pixel, holding b fixed.
std::vector<Vec3> ssim_gradient(const Image& a, const Image& b, double peak = 1.0);

struct ChamferReport {
    double mean = 0;
    double stddev = 0;
    std::vector<double> per_point;  // pred -> nearest ref
};

struct SymmetricChamferReport {
    ChamferReport pred_to_ref;
    ChamferReport ref_to_pred;
    double mean = 0;  // average of the two directional means
};

/// Directional Chamfer distance: nearest-ref distance for every pred point.
ChamferReport chamfer(const PointCloud& pred, const PointCloud& ref);

SymmetricChamferReport chamfer_symmetric(const PointCloud& pred, const PointCloud& ref);

/// Viridis-style color for t in [0,1].
Vec3 colormap_viridis(double t);

/// Copies pred and colors each point by clamp(d/cmap_max, 0, 1) through the
/// viridis ramp. Throws on length mismatch or non-positive cmap_max.
PointCloud distance_colored_cloud(const ChamferReport& report, const PointCloud& pred,
                                  double cmap_max);

} // namespace holosplat

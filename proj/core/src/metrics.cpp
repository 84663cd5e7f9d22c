#include "holosplat/metrics.hpp"
#include "holosplat/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace holosplat {

double psnr(const Image& a, const Image& b, double peak) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("psnr: image shapes differ");
    double sum_sq = 0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        sum_sq += (a.pixels[i] - b.pixels[i]).squaredNorm();
    const double mse = sum_sq / (double(a.pixels.size()) * 3.0);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double dssim(const Image& a, const Image& b, double peak) {
    return (1.0 - ssim(a, b, peak)) / 2.0;
}

ChamferReport chamfer(const PointCloud& pred, const PointCloud& ref) {
    if (pred.size() == 0 || ref.size() == 0)
        throw std::invalid_argument("chamfer: empty point cloud");
    KdTree tree(ref.positions);
    ChamferReport report;
    report.per_point.reserve(pred.size());
    for (const auto& p : pred.positions)
        report.per_point.push_back(tree.nearest(p).distance);
    double sum = 0;
    for (double d : report.per_point) sum += d;
    report.mean = sum / double(report.per_point.size());
    double var = 0;
    for (double d : report.per_point) var += (d - report.mean) * (d - report.mean);
    report.stddev = std::sqrt(var / double(report.per_point.size()));
    return report;
}

SymmetricChamferReport chamfer_symmetric(const PointCloud& pred, const PointCloud& ref) {
    SymmetricChamferReport out;
    out.pred_to_ref = chamfer(pred, ref);
    out.ref_to_pred = chamfer(ref, pred);
    out.mean = 0.5 * (out.pred_to_ref.mean + out.ref_to_pred.mean);
    return out;
}

Vec3 colormap_viridis(double t) {
    static const Vec3 anchors[] = {
        {0.267004, 0.004874, 0.329415}, {0.282623, 0.140926, 0.457517},
        {0.253935, 0.265254, 0.529983}, {0.206756, 0.371758, 0.553117},
        {0.163625, 0.471133, 0.558148}, {0.127568, 0.566949, 0.550556},
        {0.134692, 0.658636, 0.517649}, {0.266941, 0.748751, 0.440573},
        {0.477504, 0.821444, 0.318195}, {0.741388, 0.873449, 0.149561},
        {0.993248, 0.906157, 0.143936}};
    constexpr int n = 11;
    t = std::clamp(t, 0.0, 1.0);
    const double x = t * (n - 1);
    const int lo = std::min(n - 2, int(x));
    const double f = x - lo;
    return (1.0 - f) * anchors[lo] + f * anchors[lo + 1];
}

PointCloud distance_colored_cloud(const ChamferReport& report, const PointCloud& pred,
                                  double cmap_max) {
    if (report.per_point.size() != pred.size())
        throw std::invalid_argument("distance_colored_cloud: length mismatch");
    if (cmap_max <= 0) throw std::invalid_argument("distance_colored_cloud: cmap_max must be > 0");
    PointCloud out;
    out.positions = pred.positions;
    out.colors.reserve(pred.size());
    for (double d : report.per_point)
        out.colors.push_back(colormap_viridis(d / cmap_max));
    return out;
}

} // namespace holosplat

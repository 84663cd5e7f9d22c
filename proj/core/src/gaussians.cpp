#include "holosplat/gaussians.hpp"
#include "holosplat/kdtree.hpp"

#include <stdexcept>

namespace holosplat {

namespace {
constexpr double kScaleFloor = 1e-7;   // meters, guards log(0) on coincident points
constexpr double kInitOpacity = 0.1;

Mat3 rotation_from_unit(double w, double x, double y, double z) {
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}
} // namespace

Mat3 quat_to_rotation(const Eigen::Vector4d& q) {
    const Eigen::Vector4d u = q.normalized();
    return rotation_from_unit(u[0], u[1], u[2], u[3]);
}

std::array<Mat3, 4> quat_to_rotation_jacobian(const Eigen::Vector4d& q) {
    const double norm = q.norm();
    const Eigen::Vector4d u = q / norm;
    const double w = u[0], x = u[1], y = u[2], z = u[3];

    std::array<Mat3, 4> d_unit;  // dR/du_k at the unit quaternion
    d_unit[0] << 0, -z, y,
                 z, 0, -x,
                 -y, x, 0;
    d_unit[1] << 0, y, z,
                 y, -2 * x, -w,
                 z, w, -2 * x;
    d_unit[2] << -2 * y, x, w,
                 x, 0, z,
                 -w, z, -2 * y;
    d_unit[3] << -2 * z, -w, x,
                 w, -2 * z, y,
                 x, y, 0;
    for (auto& m : d_unit) m *= 2.0;

    // chain through u = q / |q|
    std::array<Mat3, 4> out;
    for (int k = 0; k < 4; ++k) {
        out[k] = Mat3::Zero();
        for (int j = 0; j < 4; ++j) {
            const double du_dq = ((j == k ? 1.0 : 0.0) - u[j] * u[k]) / norm;
            out[k] += d_unit[j] * du_dq;
        }
    }
    return out;
}

Mat3 covariance_3d(const Vec3& log_scale, const Eigen::Vector4d& rotation) {
    const Mat3 r = quat_to_rotation(rotation);
    const Vec3 s = log_scale.array().exp();
    const Mat3 m = r * s.asDiagonal();
    return m * m.transpose();
}

GaussianSet init_from_cloud(const PointCloud& cloud, int sh_degree) {
    if (cloud.size() < 4)
        throw std::invalid_argument("init_from_cloud: need at least 4 points");
    if (sh_degree < 0 || sh_degree > kMaxShDegree)
        throw std::invalid_argument("init_from_cloud: unsupported SH degree");

    GaussianSet g;
    g.sh_degree = sh_degree;
    g.resize(cloud.size());

    KdTree tree(cloud.positions);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        g.centers[i] = cloud.positions[i];
        const auto hits = tree.knearest(cloud.positions[i], 3, i);
        double mean = 0;
        for (const auto& h : hits) mean += h.distance;
        mean /= double(hits.size());
        const double scale = std::max(mean, kScaleFloor);
        g.log_scales[i] = Vec3::Constant(std::log(scale));
        g.rotations[i] = Eigen::Vector4d(1, 0, 0, 0);
        g.opacity_logits[i] = logit(kInitOpacity);

        Vec3* sh = g.sh_of(i);
        const int basis = g.sh_basis();
        for (int b = 0; b < basis; ++b) sh[b] = Vec3::Zero();
        const Vec3 color = cloud.has_colors() ? cloud.colors[i] : Vec3::Constant(0.5);
        // degree-0 term reproduces the point color: 0.5 + Y0 * c = color
        sh[0] = (color - Vec3::Constant(0.5)) / 0.28209479177387814;
    }
    return g;
}

PointCloud extract_centers(const GaussianSet& g, double prune_opacity) {
    PointCloud cloud;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.opacity(i) < prune_opacity) continue;
        cloud.positions.push_back(g.centers[i]);
        cloud.colors.push_back(sh_to_color(g.sh_of(i), Vec3(0, 0, 1), 0));
    }
    return cloud;
}

} // namespace holosplat

#include "holosplat/gaussians.hpp"
#include "holosplat/kdtree.hpp"
#include "holosplat/sh.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace holosplat;

namespace {

PointCloud random_cloud(std::size_t n, unsigned seed, bool colored = false) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i) {
        cloud.positions.emplace_back(u(rng), u(rng), u(rng));
        if (colored) cloud.colors.emplace_back(0.5 + 0.5 * u(rng), 0.5 + 0.5 * u(rng), 0.5 + 0.5 * u(rng));
    }
    return cloud;
}

// reference k-NN: full sort by (distance, index)
std::vector<std::size_t> brute_knn(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k,
                                   std::size_t exclude) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i == exclude) continue;
        d.emplace_back((pts[i] - q).norm(), i);
    }
    std::sort(d.begin(), d.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k && i < d.size(); ++i) out.push_back(d[i].second);
    return out;
}

} // namespace

TEST_CASE("sigmoid and logit are inverses") {
    for (double p : {0.005, 0.1, 0.5, 0.9, 0.99})
        CHECK(sigmoid(logit(p)) == doctest::Approx(p).epsilon(1e-12));
    CHECK(sigmoid(0.0) == doctest::Approx(0.5));
}

TEST_CASE("quat_to_rotation: identity, axis rotations, orthonormality") {
    CHECK((quat_to_rotation({1, 0, 0, 0}) - Mat3::Identity()).norm() < 1e-15);

    // 90 degrees about z: x -> y
    const double s = std::sqrt(0.5);
    const Mat3 rz = quat_to_rotation({s, 0, 0, s});
    CHECK((rz * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() < 1e-12);

    std::mt19937 rng(17);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector4d q(normal(rng), normal(rng), normal(rng), normal(rng));
        const Mat3 r = quat_to_rotation(q);
        CHECK((r * r.transpose() - Mat3::Identity()).norm() < 1e-12);
        CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
        // agrees with Eigen on the normalized quaternion
        const Eigen::Vector4d u = q.normalized();
        const Mat3 ref = Quat(u[0], u[1], u[2], u[3]).toRotationMatrix();
        CHECK((r - ref).norm() < 1e-12);
    }
}

TEST_CASE("quat_to_rotation_jacobian matches finite differences") {
    std::mt19937 rng(29);
    std::normal_distribution<double> normal;
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::Vector4d q(normal(rng), normal(rng), normal(rng), normal(rng));
        if (q.norm() < 0.1) q[0] += 1.0;
        const auto jac = quat_to_rotation_jacobian(q);
        for (int k = 0; k < 4; ++k) {
            Eigen::Vector4d qp = q, qm = q;
            qp[k] += h;
            qm[k] -= h;
            const Mat3 fd = (quat_to_rotation(qp) - quat_to_rotation(qm)) / (2 * h);
            CHECK((jac[k] - fd).norm() < 1e-6);
        }
    }
}

TEST_CASE("covariance_3d: brute-force R S S^T R^T and symmetry") {
    std::mt19937 rng(31);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 100; ++i) {
        const Vec3 ls(normal(rng) * 0.5, normal(rng) * 0.5, normal(rng) * 0.5);
        const Eigen::Vector4d q(normal(rng) + 1.0, normal(rng), normal(rng), normal(rng));
        const Mat3 sigma = covariance_3d(ls, q);
        const Mat3 r = quat_to_rotation(q);
        const Mat3 s = Vec3(ls.array().exp()).asDiagonal();
        const Mat3 ref = r * s * s * r.transpose();
        CHECK((sigma - ref).norm() < 1e-12);
        CHECK((sigma - sigma.transpose()).norm() < 1e-14);
        // PSD: x^T Sigma x >= 0
        const Vec3 x(normal(rng), normal(rng), normal(rng));
        CHECK(x.dot(sigma * x) >= 0.0);
    }
}

TEST_CASE("covariance_3d: isotropic case is exp(2*log_scale)*I") {
    const Mat3 sigma = covariance_3d(Vec3::Constant(std::log(0.2)), {1, 0, 0, 0});
    CHECK((sigma - 0.04 * Mat3::Identity()).norm() < 1e-14);
}

TEST_CASE("kdtree: nearest and knearest match brute force on random clouds") {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 5 + trial * 13;
        std::vector<Vec3> pts;
        for (std::size_t i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
        // force exact ties
        if (n > 4) pts[3] = pts[1];
        KdTree tree(pts);
        for (int qi = 0; qi < 20; ++qi) {
            const Vec3 q(u(rng), u(rng), u(rng));
            const auto nearest = tree.nearest(q);
            CHECK(nearest.index == brute_knn(pts, q, 1, static_cast<std::size_t>(-1))[0]);
            const std::size_t k = std::min<std::size_t>(4, n);
            const auto hits = tree.knearest(q, k);
            const auto ref = brute_knn(pts, q, k, static_cast<std::size_t>(-1));
            REQUIRE(hits.size() == ref.size());
            for (std::size_t i = 0; i < k; ++i) {
                CHECK(hits[i].index == ref[i]);
                CHECK(hits[i].distance == doctest::Approx((pts[ref[i]] - q).norm()).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("kdtree: exclusion removes exactly the requested index") {
    std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    KdTree tree(pts);
    const auto hits = tree.knearest(Vec3(0.1, 0, 0), 2, 0);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].index == 1);
    CHECK(hits[1].index == 2);
}

TEST_CASE("init_from_cloud: scale equals mean 3-NN distance (brute force)") {
    const PointCloud cloud = random_cloud(60, 51);
    const GaussianSet g = init_from_cloud(cloud, 0);
    REQUIRE(g.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nn = brute_knn(cloud.positions, cloud.positions[i], 3, i);
        double mean = 0;
        for (std::size_t j : nn) mean += (cloud.positions[j] - cloud.positions[i]).norm();
        mean /= 3.0;
        const Vec3 scale = g.scale(i);
        CHECK(scale.x() == doctest::Approx(mean).epsilon(1e-12));
        CHECK(scale.y() == doctest::Approx(mean).epsilon(1e-12));
        CHECK(scale.z() == doctest::Approx(mean).epsilon(1e-12));
        CHECK((g.centers[i] - cloud.positions[i]).norm() == 0.0);
        CHECK(g.opacity(i) == doctest::Approx(0.1).epsilon(1e-12));
        CHECK((g.rotations[i] - Eigen::Vector4d(1, 0, 0, 0)).norm() == 0.0);
    }
}

TEST_CASE("init_from_cloud: degenerate duplicate points get the scale floor") {
    PointCloud cloud;
    for (int i = 0; i < 5; ++i) cloud.positions.emplace_back(0, 0, 0);
    const GaussianSet g = init_from_cloud(cloud, 0);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(g.scale(i).x() == doctest::Approx(1e-7));
}

TEST_CASE("init_from_cloud: colors land in the dc term, gray when uncolored") {
    const PointCloud colored = random_cloud(10, 77, true);
    const GaussianSet g = init_from_cloud(colored, 2);
    CHECK(g.sh_degree == 2);
    for (std::size_t i = 0; i < g.size(); ++i) {
        // color = 0.5 + Y0 * dc must reproduce the input color
        const Vec3 back = sh_to_color(g.sh_of(i), Vec3(0, 0, 1), g.sh_degree);
        CHECK((back - colored.colors[i]).norm() < 1e-12);
        for (int b = 1; b < g.sh_basis(); ++b)
            CHECK(g.sh_of(i)[b].norm() == 0.0);
    }

    const GaussianSet gray = init_from_cloud(random_cloud(10, 78), 0);
    const Vec3 c = sh_to_color(gray.sh_of(0), Vec3(0, 0, 1), 0);
    CHECK((c - Vec3(0.5, 0.5, 0.5)).norm() < 1e-12);
}

TEST_CASE("init_from_cloud: fewer than 4 points throws") {
    CHECK_THROWS(init_from_cloud(random_cloud(3, 1), 0));
}

TEST_CASE("extract_centers on a fresh init returns the input cloud verbatim") {
    const PointCloud cloud = random_cloud(50, 91, true);
    const GaussianSet g = init_from_cloud(cloud, 0);
    const PointCloud out = extract_centers(g, 0.005);
    REQUIRE(out.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK((out.positions[i] - cloud.positions[i]).norm() == 0.0);
        CHECK((out.colors[i] - cloud.colors[i]).norm() < 1e-12);
    }
}

TEST_CASE("extract_centers prunes by opacity threshold") {
    GaussianSet g = init_from_cloud(random_cloud(6, 3), 0);
    g.opacity_logits[2] = logit(0.001);
    g.opacity_logits[4] = logit(0.004999);
    const PointCloud out = extract_centers(g, 0.005);
    CHECK(out.size() == 4);
}

TEST_CASE("sh_basis: degree 0 is the usual constant, basis is orthonormal") {
    double y[kMaxShBasis];
    sh_basis(Vec3(0, 0, 1), 0, y);
    CHECK(y[0] == doctest::Approx(0.28209479177387814).epsilon(1e-15));

    // Monte-Carlo orthonormality over the sphere: E[Y_a Y_b] = delta / (4 pi)
    std::mt19937 rng(61);
    std::normal_distribution<double> normal;
    const int samples = 200000;
    Eigen::Matrix<double, kMaxShBasis, kMaxShBasis> gram;
    gram.setZero();
    double yv[kMaxShBasis];
    for (int s = 0; s < samples; ++s) {
        Vec3 dir(normal(rng), normal(rng), normal(rng));
        dir.normalize();
        sh_basis(dir, kMaxShDegree, yv);
        for (int a = 0; a < kMaxShBasis; ++a)
            for (int b = 0; b < kMaxShBasis; ++b) gram(a, b) += yv[a] * yv[b];
    }
    gram *= 4.0 * M_PI / samples;
    CHECK((gram - Eigen::Matrix<double, kMaxShBasis, kMaxShBasis>::Identity()).norm() < 0.2);
}

TEST_CASE("sh_basis_gradient matches finite differences") {
    std::mt19937 rng(67);
    std::normal_distribution<double> normal;
    const double h = 1e-6;
    for (int trial = 0; trial < 30; ++trial) {
        Vec3 dir(normal(rng), normal(rng), normal(rng));
        dir.normalize();
        Vec3 grads[kMaxShBasis];
        sh_basis_gradient(dir, kMaxShDegree, grads);
        for (int axis = 0; axis < 3; ++axis) {
            Vec3 dp = dir, dm = dir;
            dp[axis] += h;
            dm[axis] -= h;
            double yp[kMaxShBasis], ym[kMaxShBasis];
            sh_basis(dp, kMaxShDegree, yp);
            sh_basis(dm, kMaxShDegree, ym);
            for (int b = 0; b < kMaxShBasis; ++b)
                CHECK(grads[b][axis] == doctest::Approx((yp[b] - ym[b]) / (2 * h)).epsilon(1e-4));
        }
    }
}

TEST_CASE("sh_to_color clamps to [0,1]") {
    Vec3 coeffs[1] = {Vec3(100, -100, 0)};
    const Vec3 c = sh_to_color(coeffs, Vec3(0, 0, 1), 0);
    CHECK(c.x() == 1.0);
    CHECK(c.y() == 0.0);
    CHECK(c.z() == 0.5);
}

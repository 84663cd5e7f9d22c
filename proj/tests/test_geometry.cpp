#include "holosplat/geometry.hpp"

#include <doctest.h>

#include <random>

using namespace holosplat;

namespace {

CameraIntrinsics test_intrinsics() {
    CameraIntrinsics k;
    k.fx = 100;
    k.fy = 100;
    k.cx = 320;
    k.cy = 240;
    k.width = 640;
    k.height = 480;
    return k;
}

Pose random_pose(std::mt19937& rng) {
    std::normal_distribution<double> normal;
    Pose pose;
    pose.rotation = Quat(normal(rng), normal(rng), normal(rng), normal(rng)).normalized();
    pose.translation = Vec3(normal(rng), normal(rng), normal(rng));
    return pose;
}

} // namespace

TEST_CASE("project: principal ray hits the principal point") {
    const auto px = project(Vec3(0, 0, 2), test_intrinsics());
    CHECK(px.u == doctest::Approx(320.0));
    CHECK(px.v == doctest::Approx(240.0));
}

TEST_CASE("project: closed-form pinhole") {
    const auto px = project(Vec3(1, 0, 1), test_intrinsics());
    CHECK(px.u == doctest::Approx(420.0));
}

TEST_CASE("project: behind-camera error") {
    CHECK_THROWS_AS(project(Vec3(0, 0, -1), test_intrinsics()), BehindCameraError);
    CHECK_THROWS_AS(project(Vec3(0, 0, 0), test_intrinsics()), BehindCameraError);
}

TEST_CASE("project/unproject round trip on random in-frustum points") {
    const auto k = test_intrinsics();
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0), depth(0.1, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const double z = depth(rng);
        const Vec3 p(u(rng) * z, u(rng) * z, z);
        const auto px = project(p, k);
        const Vec3 back = unproject(px, z, k);
        CHECK((back - p).norm() < 1e-9);
    }
}

TEST_CASE("transform_point: identity and pure translation") {
    CHECK((transform_point(Pose::identity(), Vec3(1, 2, 3)) - Vec3(1, 2, 3)).norm() == 0.0);
    Pose t;
    t.translation = Vec3(0, 0, 5);
    CHECK((transform_point(t, Vec3::Zero()) - Vec3(0, 0, 5)).norm() == 0.0);
}

TEST_CASE("transform then inverse-transform returns input") {
    std::mt19937 rng(11);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 200; ++i) {
        const Pose pose = random_pose(rng);
        const Pose inv = invert_pose(pose);
        const Vec3 p(normal(rng), normal(rng), normal(rng));
        CHECK((transform_point(inv, transform_point(pose, p)) - p).norm() < 1e-12);
    }
}

TEST_CASE("invert_pose: trivial cases and composition residual") {
    const Pose id_inv = invert_pose(Pose::identity());
    CHECK(id_inv.translation.norm() == 0.0);

    Pose t;
    t.translation = Vec3(1, 0, 0);
    CHECK((invert_pose(t).translation - Vec3(-1, 0, 0)).norm() == 0.0);

    std::mt19937 rng(3);
    for (int i = 0; i < 200; ++i) {
        const Pose pose = random_pose(rng);
        const Pose round = compose(pose, invert_pose(pose));
        CHECK(round.translation.norm() < 1e-12);
        CHECK(std::abs(std::abs(round.rotation.w()) - 1.0) < 1e-12);
    }
}

TEST_CASE("pose composition is associative") {
    std::mt19937 rng(5);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 100; ++i) {
        const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
        const Vec3 p(normal(rng), normal(rng), normal(rng));
        const Vec3 lhs = transform_point(compose(compose(a, b), c), p);
        const Vec3 rhs = transform_point(compose(a, compose(b, c)), p);
        CHECK((lhs - rhs).norm() < 1e-10);
    }
}

TEST_CASE("quaternion norm stays unit across 1e6 compositions") {
    std::mt19937 rng(13);
    Pose acc = Pose::identity();
    const Pose step = random_pose(rng);
    for (int i = 0; i < 1000000; ++i) acc = compose(acc, step);
    CHECK(std::abs(acc.rotation.norm() - 1.0) < 1e-9);
}

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>

namespace holosplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

struct BehindCameraError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Pinhole camera. Convention: +z forward, +x right, +y down, pixel
/// origin at the top-left corner.
struct CameraIntrinsics {
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;
    int width = 0, height = 0;

    bool valid() const {
        return fx > 0 && fy > 0 && width > 0 && height > 0 &&
               cx >= 0 && cx < width && cy >= 0 && cy < height;
    }
};

/// Continuous image coordinates, +u right, +v down.
struct Pixel {
    double u = 0, v = 0;
};

/// Rigid camera-to-world transform.
struct Pose {
    Quat rotation = Quat::Identity();
    Vec3 translation = Vec3::Zero();

    static Pose identity() { return Pose{}; }

    void normalize() { rotation.normalize(); }
    bool valid(double tol = 1e-9) const {
        return std::abs(rotation.norm() - 1.0) < tol && translation.allFinite();
    }
};

/// Project a camera-frame point onto the image plane. Throws
/// BehindCameraError when z <= 0.
Pixel project(const Vec3& point_cam, const CameraIntrinsics& k);

/// Inverse of project for a given depth: pixel + z-depth -> camera-frame point.
Vec3 unproject(const Pixel& px, double depth, const CameraIntrinsics& k);

/// Apply the pose: camera frame -> world frame (R*p + t).
Vec3 transform_point(const Pose& pose, const Vec3& p);

Pose invert_pose(const Pose& pose);

/// compose(a, b) maps p to a(b(p)).
Pose compose(const Pose& a, const Pose& b);

/// World-to-camera rotation/translation pair derived from a camera-to-world pose.
struct WorldToCamera {
    Mat3 rotation;
    Vec3 translation;

    explicit WorldToCamera(const Pose& cam_to_world);
    Vec3 apply(const Vec3& p_world) const { return rotation * p_world + translation; }
};

} // namespace holosplat

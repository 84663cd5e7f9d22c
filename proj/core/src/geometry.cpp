#include "holosplat/geometry.hpp"

namespace holosplat {

Pixel project(const Vec3& point_cam, const CameraIntrinsics& k) {
    if (point_cam.z() <= 0.0)
        throw BehindCameraError("project: point has non-positive depth");
    const double inv_z = 1.0 / point_cam.z();
    return Pixel{k.fx * point_cam.x() * inv_z + k.cx,
                 k.fy * point_cam.y() * inv_z + k.cy};
}

Vec3 unproject(const Pixel& px, double depth, const CameraIntrinsics& k) {
    return depth * Vec3((px.u - k.cx) / k.fx, (px.v - k.cy) / k.fy, 1.0);
}

Vec3 transform_point(const Pose& pose, const Vec3& p) {
    return pose.rotation * p + pose.translation;
}

Pose invert_pose(const Pose& pose) {
    Pose inv;
    inv.rotation = pose.rotation.conjugate();
    inv.translation = -(inv.rotation * pose.translation);
    return inv;
}

Pose compose(const Pose& a, const Pose& b) {
    Pose out;
    out.rotation = a.rotation * b.rotation;
    out.rotation.normalize();
    out.translation = a.rotation * b.translation + a.translation;
    return out;
}

WorldToCamera::WorldToCamera(const Pose& cam_to_world) {
    rotation = cam_to_world.rotation.conjugate().toRotationMatrix();
    translation = -(rotation * cam_to_world.translation);
}

} // namespace holosplat

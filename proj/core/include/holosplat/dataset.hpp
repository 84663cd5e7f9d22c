#pragma once

#include "holosplat/depth.hpp"
#include "holosplat/gaussians.hpp"
#include "holosplat/image.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace holosplat {

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RgbFrame {
    std::filesystem::path image_path;
    CameraIntrinsics intrinsics;
    Pose pose;  // camera-to-world

    Image load() const;
};

/// Parsed manifest entry for a depth frame; depth values are converted to
/// meters on load via the per-frame depth scale.
struct DepthFrameRef {
    std::filesystem::path depth_path;
    CameraIntrinsics intrinsics;
    Pose pose;
    double depth_scale = 0.001;  // meters per stored unit

    DepthFrame load() const;
};

struct Dataset {
    std::vector<RgbFrame> rgb;
    std::vector<DepthFrameRef> depth;
    std::string world_frame;
    std::string units = "meters";
};

inline constexpr const char* kManifestSchema = "holosplat-dataset/1";

/// Loads and validates a manifest. Every problem (missing file, bad pose,
/// bad intrinsics) is collected and reported in one DatasetError.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes dataset.json next to the referenced files (paths stored relative
/// to the manifest directory when possible).
void write_manifest(const Dataset& dataset, const std::filesystem::path& manifest_path);

/// COLMAP text model import (cameras.txt / images.txt / points3D.txt).
/// Poses are converted from world-to-camera to camera-to-world. Only
/// PINHOLE and SIMPLE_PINHOLE camera models are accepted.
struct ColmapImport {
    std::vector<RgbFrame> frames;
    PointCloud cloud;
};
ColmapImport import_colmap_text(const std::filesystem::path& dir);

/// Synthetic desk-scale scene: well-separated Gaussians in the unit box,
/// hemisphere poses aimed at the origin, RGB + depth rendered to disk.
struct SyntheticSpec {
    int gaussians = 10;
    int views = 20;
    unsigned seed = 0;
    int width = 64, height = 64;
    int sh_degree = 0;
    Vec3 background = Vec3::Zero();
};

struct SyntheticScene {
    GaussianSet ground_truth;
    Dataset dataset;
    std::filesystem::path manifest_path;
    std::filesystem::path ground_truth_ply;
};

SyntheticScene generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

/// Hemisphere camera placement used by the generator (exposed for tests):
/// radius away from the origin, optical axis through the origin.
Pose hemisphere_pose(int index, int total, double radius);

} // namespace holosplat

#include "holosplat/dataset.hpp"
#include "holosplat/image_io.hpp"
#include "holosplat/ply.hpp"
#include "holosplat/rasterizer.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace holosplat {

using nlohmann::json;

namespace {

constexpr double kPoseNormTolerance = 1e-6;

json intrinsics_to_json(const CameraIntrinsics& k) {
    return json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
                {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
    CameraIntrinsics k;
    k.fx = j.at("fx");
    k.fy = j.at("fy");
    k.cx = j.at("cx");
    k.cy = j.at("cy");
    k.width = j.at("width");
    k.height = j.at("height");
    return k;
}

json pose_to_json(const Pose& pose) {
    return json{{"rotation", {pose.rotation.w(), pose.rotation.x(), pose.rotation.y(),
                              pose.rotation.z()}},
                {"translation", {pose.translation.x(), pose.translation.y(),
                                 pose.translation.z()}}};
}

Pose pose_from_json(const json& j) {
    const auto& q = j.at("rotation");
    const auto& t = j.at("translation");
    Pose pose;
    pose.rotation = Quat(q.at(0), q.at(1), q.at(2), q.at(3));
    pose.translation = Vec3(t.at(0), t.at(1), t.at(2));
    return pose;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& rel) {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : base / p;
}

} // namespace

Image RgbFrame::load() const { return read_png_rgb8(image_path); }

DepthFrame DepthFrameRef::load() const {
    DepthFrame frame;
    frame.intrinsics = intrinsics;
    frame.pose = pose;
    if (depth_path.extension() == ".bin") {
        std::ifstream in(depth_path, std::ios::binary);
        if (!in) throw DatasetError("dataset: cannot open " + depth_path.string());
        std::vector<float> raw(std::size_t(intrinsics.width) * intrinsics.height);
        in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * 4));
        if (std::size_t(in.gcount()) != raw.size() * 4)
            throw DatasetError("dataset: truncated raw depth " + depth_path.string());
        frame.depth.assign(raw.begin(), raw.end());
        for (double& d : frame.depth) d *= depth_scale;
    } else {
        const GrayImage img = read_png_gray16(depth_path, depth_scale);
        if (img.width != intrinsics.width || img.height != intrinsics.height)
            throw DatasetError("dataset: depth size mismatch for " + depth_path.string());
        frame.depth = img.pixels;
    }
    return frame;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DatasetError("dataset: cannot open manifest " + manifest_path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw DatasetError("dataset: manifest parse error: " + std::string(e.what()));
    }
    if (doc.value("schema", "") != kManifestSchema)
        throw DatasetError("dataset: unsupported schema \"" + doc.value("schema", "") + "\"");

    const std::filesystem::path base = manifest_path.parent_path();
    Dataset dataset;
    dataset.world_frame = doc.value("world_frame", "");
    dataset.units = doc.value("units", "meters");

    std::vector<std::string> errors;
    auto check_common = [&](const CameraIntrinsics& k, const Pose& pose,
                            const std::filesystem::path& file, const std::string& what) {
        if (!std::filesystem::exists(file))
            errors.push_back(what + ": missing file " + file.string());
        if (!k.valid()) errors.push_back(what + ": invalid intrinsics for " + file.string());
        if (!pose.valid(kPoseNormTolerance))
            errors.push_back(what + ": non-unit pose quaternion for " + file.string());
    };

    for (const auto& j : doc.value("rgb_frames", json::array())) {
        RgbFrame frame;
        frame.image_path = resolve(base, j.at("image"));
        frame.intrinsics = intrinsics_from_json(j.at("intrinsics"));
        frame.pose = pose_from_json(j.at("pose"));
        frame.pose.normalize();
        check_common(frame.intrinsics, frame.pose, frame.image_path, "rgb");
        dataset.rgb.push_back(std::move(frame));
    }
    for (const auto& j : doc.value("depth_frames", json::array())) {
        DepthFrameRef frame;
        frame.depth_path = resolve(base, j.at("depth"));
        frame.intrinsics = intrinsics_from_json(j.at("intrinsics"));
        frame.pose = pose_from_json(j.at("pose"));
        frame.pose.normalize();
        frame.depth_scale = j.value("depth_scale", 0.001);
        if (frame.depth_scale <= 0)
            errors.push_back("depth: non-positive depth_scale for " + frame.depth_path.string());
        check_common(frame.intrinsics, frame.pose, frame.depth_path, "depth");
        dataset.depth.push_back(std::move(frame));
    }

    if (!errors.empty()) {
        std::ostringstream msg;
        msg << "dataset: " << errors.size() << " load error(s):";
        for (const auto& e : errors) msg << "\n  - " << e;
        throw DatasetError(msg.str());
    }
    return dataset;
}

void write_manifest(const Dataset& dataset, const std::filesystem::path& manifest_path) {
    const std::filesystem::path base = manifest_path.parent_path();
    auto relativize = [&](const std::filesystem::path& p) {
        std::error_code ec;
        const auto rel = std::filesystem::relative(p, base, ec);
        return (ec || rel.empty()) ? p.string() : rel.string();
    };

    json doc;
    doc["schema"] = kManifestSchema;
    doc["world_frame"] = dataset.world_frame;
    doc["units"] = dataset.units;
    doc["rgb_frames"] = json::array();
    for (const auto& f : dataset.rgb)
        doc["rgb_frames"].push_back(json{{"image", relativize(f.image_path)},
                                         {"intrinsics", intrinsics_to_json(f.intrinsics)},
                                         {"pose", pose_to_json(f.pose)}});
    doc["depth_frames"] = json::array();
    for (const auto& f : dataset.depth)
        doc["depth_frames"].push_back(json{{"depth", relativize(f.depth_path)},
                                           {"intrinsics", intrinsics_to_json(f.intrinsics)},
                                           {"pose", pose_to_json(f.pose)},
                                           {"depth_scale", f.depth_scale}});

    const std::filesystem::path tmp = manifest_path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw DatasetError("dataset: cannot write " + tmp.string());
        out << doc.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, manifest_path);
}

namespace {

std::vector<std::string> read_colmap_lines(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DatasetError("colmap: cannot open " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(line);
    }
    return lines;
}

} // namespace

ColmapImport import_colmap_text(const std::filesystem::path& dir) {
    std::map<int, CameraIntrinsics> cameras;
    for (const auto& line : read_colmap_lines(dir / "cameras.txt")) {
        std::istringstream ss(line);
        int id, width, height;
        std::string model;
        ss >> id >> model >> width >> height;
        CameraIntrinsics k;
        k.width = width;
        k.height = height;
        if (model == "PINHOLE") {
            ss >> k.fx >> k.fy >> k.cx >> k.cy;
        } else if (model == "SIMPLE_PINHOLE") {
            double f;
            ss >> f >> k.cx >> k.cy;
            k.fx = k.fy = f;
        } else {
            throw DatasetError("colmap: unsupported camera model " + model);
        }
        cameras[id] = k;
    }

    ColmapImport out;
    const auto image_lines = read_colmap_lines(dir / "images.txt");
    // images.txt alternates pose lines and 2-d point lines
    for (std::size_t i = 0; i < image_lines.size(); i += 2) {
        std::istringstream ss(image_lines[i]);
        int image_id, camera_id;
        double qw, qx, qy, qz, tx, ty, tz;
        std::string name;
        ss >> image_id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> camera_id >> name;
        if (!ss) throw DatasetError("colmap: malformed images.txt line: " + image_lines[i]);
        const auto cam = cameras.find(camera_id);
        if (cam == cameras.end())
            throw DatasetError("colmap: images.txt references unknown camera " +
                               std::to_string(camera_id));

        // COLMAP stores world-to-camera; invert to camera-to-world
        Pose w2c;
        w2c.rotation = Quat(qw, qx, qy, qz).normalized();
        w2c.translation = Vec3(tx, ty, tz);
        RgbFrame frame;
        frame.image_path = dir / name;
        frame.intrinsics = cam->second;
        frame.pose = invert_pose(w2c);
        out.frames.push_back(std::move(frame));
    }

    for (const auto& line : read_colmap_lines(dir / "points3D.txt")) {
        std::istringstream ss(line);
        long long id;
        double x, y, z;
        int r, g, b;
        ss >> id >> x >> y >> z >> r >> g >> b;
        if (!ss) throw DatasetError("colmap: malformed points3D.txt line: " + line);
        out.cloud.positions.emplace_back(x, y, z);
        out.cloud.colors.emplace_back(r / 255.0, g / 255.0, b / 255.0);
    }
    return out;
}

Pose hemisphere_pose(int index, int total, double radius) {
    // golden-angle azimuth spread, elevations between 15 and 75 degrees
    constexpr double kGolden = 2.39996322972865332;
    const double az = index * kGolden;
    const double frac = total > 1 ? double(index) / double(total - 1) : 0.5;
    const double el = (15.0 + 60.0 * frac) * M_PI / 180.0;
    const Vec3 pos = radius * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                   std::sin(el));

    const Vec3 forward = (-pos).normalized();  // optical axis through the origin
    const Vec3 up(0, 0, 1);
    const Vec3 right = (-up).cross(forward).normalized();
    const Vec3 down = forward.cross(right);
    Mat3 r;
    r.col(0) = right;
    r.col(1) = down;
    r.col(2) = forward;

    Pose pose;
    pose.rotation = Quat(r).normalized();
    pose.translation = pos;
    return pose;
}

SyntheticScene generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
    if (spec.views < 4) throw DatasetError("synthetic: need at least 4 views");
    if (spec.gaussians < 4) throw DatasetError("synthetic: need at least 4 gaussians");
    std::filesystem::create_directories(out_dir);

    std::mt19937 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SyntheticScene scene;
    GaussianSet& gt = scene.ground_truth;
    gt.sh_degree = spec.sh_degree;
    gt.resize(spec.gaussians);

    // well-separated centers inside the unit box
    constexpr double kMinSeparation = 0.18;
    std::vector<Vec3> centers;
    while (int(centers.size()) < spec.gaussians) {
        const Vec3 c(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5);
        bool ok = true;
        for (const auto& o : centers)
            if ((c - o).norm() < kMinSeparation) ok = false;
        if (ok) centers.push_back(c);
    }
    for (int i = 0; i < spec.gaussians; ++i) {
        gt.centers[i] = centers[i];
        const double s = 0.04 + 0.05 * unit(rng);
        gt.log_scales[i] = Vec3::Constant(std::log(s));
        Eigen::Vector4d q(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5);
        gt.rotations[i] = q.normalized();
        gt.opacity_logits[i] = logit(0.65 + 0.3 * unit(rng));
        Vec3* sh = gt.sh_of(i);
        for (int b = 0; b < gt.sh_basis(); ++b) sh[b] = Vec3::Zero();
        const Vec3 color(0.2 + 0.8 * unit(rng), 0.2 + 0.8 * unit(rng), 0.2 + 0.8 * unit(rng));
        sh[0] = (color - Vec3::Constant(0.5)) / 0.28209479177387814;
    }

    CameraIntrinsics k;
    k.width = spec.width;
    k.height = spec.height;
    k.fx = k.fy = 1.1 * spec.width;
    k.cx = (spec.width - 1) / 2.0;
    k.cy = (spec.height - 1) / 2.0;

    Dataset& dataset = scene.dataset;
    dataset.world_frame = "synthetic scene frame, origin at box center";
    for (int v = 0; v < spec.views; ++v) {
        const Pose pose = hemisphere_pose(v, spec.views, 2.0);
        const RenderOutput rendered = render(gt, pose, k, spec.background);

        char name[64];
        std::snprintf(name, sizeof(name), "rgb_%03d.png", v);
        Image rgb(k.width, k.height);
        rgb.pixels.assign(rendered.image.begin(), rendered.image.end());
        write_png_rgb8(rgb, out_dir / name);

        RgbFrame rgb_frame;
        rgb_frame.image_path = out_dir / name;
        rgb_frame.intrinsics = k;
        rgb_frame.pose = pose;
        dataset.rgb.push_back(rgb_frame);

        std::snprintf(name, sizeof(name), "depth_%03d.png", v);
        GrayImage depth(k.width, k.height);
        depth.pixels = rendered.depth;
        write_png_gray16(depth, out_dir / name, 0.001);

        DepthFrameRef depth_frame;
        depth_frame.depth_path = out_dir / name;
        depth_frame.intrinsics = k;
        depth_frame.pose = pose;
        depth_frame.depth_scale = 0.001;
        dataset.depth.push_back(depth_frame);
    }

    scene.manifest_path = out_dir / "dataset.json";
    write_manifest(dataset, scene.manifest_path);
    scene.ground_truth_ply = out_dir / "gt_model.ply";
    write_gaussian_ply(gt, scene.ground_truth_ply);
    return scene;
}

} // namespace holosplat

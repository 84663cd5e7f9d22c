#include "holosplat/dataset.hpp"
#include "holosplat/image_io.hpp"
#include "holosplat/ply.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace holosplat;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("holosplat_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GaussianSet random_gaussians(std::size_t n, int degree, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal;
    GaussianSet g;
    g.sh_degree = degree;
    g.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        g.centers[i] = Vec3(normal(rng), normal(rng), normal(rng));
        g.log_scales[i] = Vec3(normal(rng), normal(rng), normal(rng));
        g.rotations[i] = Eigen::Vector4d(normal(rng), normal(rng), normal(rng), normal(rng));
        g.opacity_logits[i] = normal(rng);
        for (int b = 0; b < g.sh_basis(); ++b)
            g.sh_of(i)[b] = Vec3(normal(rng), normal(rng), normal(rng));
    }
    return g;
}

} // namespace

TEST_CASE("ply: point-cloud round trip at float precision") {
    const fs::path dir = temp_dir("ply_cloud");
    PointCloud cloud;
    cloud.positions = {{0.5, -0.25, 2.0}, {1.125, 3.5, -0.75}};
    cloud.colors = {{1.0, 0.0, 0.5}, {0.2, 0.4, 0.6}};
    write_ply(cloud, dir / "cloud.ply");
    CHECK(!fs::exists(dir / "cloud.ply.tmp"));

    const PointCloud back = read_ply(dir / "cloud.ply");
    REQUIRE(back.size() == 2);
    REQUIRE(back.has_colors());
    for (std::size_t i = 0; i < 2; ++i) {
        // the chosen positions are exactly representable as float32
        CHECK((back.positions[i] - cloud.positions[i]).norm() == 0.0);
        for (int a = 0; a < 3; ++a)
            CHECK(back.colors[i][a] == doctest::Approx(cloud.colors[i][a]).epsilon(1.0 / 255.0));
    }
}

TEST_CASE("ply: uncolored cloud stays uncolored") {
    const fs::path dir = temp_dir("ply_plain");
    PointCloud cloud;
    cloud.positions = {{1, 2, 3}};
    write_ply(cloud, dir / "p.ply");
    CHECK(!read_ply(dir / "p.ply").has_colors());
}

TEST_CASE("ply: reads ascii and double-typed vertices") {
    const fs::path dir = temp_dir("ply_ascii");
    {
        std::ofstream out(dir / "a.ply");
        out << "ply\nformat ascii 1.0\ncomment hand written\n"
            << "element vertex 2\n"
            << "property double x\nproperty double y\nproperty double z\n"
            << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
            << "end_header\n"
            << "0.125 -1.5 2.25 255 0 128\n"
            << "3 4 5 0 255 0\n";
    }
    const PointCloud cloud = read_ply(dir / "a.ply");
    REQUIRE(cloud.size() == 2);
    CHECK((cloud.positions[0] - Vec3(0.125, -1.5, 2.25)).norm() == 0.0);
    CHECK((cloud.positions[1] - Vec3(3, 4, 5)).norm() == 0.0);
    CHECK(cloud.colors[0].x() == doctest::Approx(1.0));
    CHECK(cloud.colors[0].z() == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("ply: malformed files throw") {
    const fs::path dir = temp_dir("ply_bad");
    CHECK_THROWS_AS(read_ply(dir / "missing.ply"), PlyError);
    {
        std::ofstream out(dir / "magic.ply");
        out << "not a ply\n";
    }
    CHECK_THROWS_AS(read_ply(dir / "magic.ply"), PlyError);
    {
        std::ofstream out(dir / "trunc.ply", std::ios::binary);
        out << "ply\nformat binary_little_endian 1.0\nelement vertex 10\n"
            << "property float x\nproperty float y\nproperty float z\nend_header\n";
        const float f = 1.0f;
        out.write(reinterpret_cast<const char*>(&f), 4);
    }
    CHECK_THROWS_AS(read_ply(dir / "trunc.ply"), PlyError);
}

TEST_CASE("gaussian ply: write-read-write is byte-exact") {
    const fs::path dir = temp_dir("ply_gauss");
    for (int degree : {0, 1, 3}) {
        const GaussianSet g = random_gaussians(17, degree, 100 + degree);
        const fs::path first = dir / ("g" + std::to_string(degree) + ".ply");
        const fs::path second = dir / ("g" + std::to_string(degree) + "_again.ply");
        write_gaussian_ply(g, first);
        const GaussianSet back = read_gaussian_ply(first);
        CHECK(back.sh_degree == degree);
        REQUIRE(back.size() == g.size());
        write_gaussian_ply(back, second);
        CHECK(slurp(first) == slurp(second));
        // and the parameters themselves survive at float precision
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK((back.centers[i].cast<float>() - g.centers[i].cast<float>()).norm() == 0.0f);
            CHECK(float(back.opacity_logits[i]) == float(g.opacity_logits[i]));
            for (int b = 0; b < g.sh_basis(); ++b)
                CHECK((back.sh_of(i)[b].cast<float>() - g.sh_of(i)[b].cast<float>()).norm() == 0.0f);
        }
    }
}

TEST_CASE("gaussian ply: bad f_rest count is rejected") {
    const fs::path dir = temp_dir("ply_gauss_bad");
    {
        std::ofstream out(dir / "bad.ply", std::ios::binary);
        out << "ply\nformat binary_little_endian 1.0\nelement vertex 0\n"
            << "property float x\nproperty float y\nproperty float z\n"
            << "property float f_dc_0\nproperty float f_dc_1\nproperty float f_dc_2\n"
            << "property float f_rest_0\nproperty float f_rest_1\n"  // 2 is not 3*(basis-1)
            << "property float opacity\n"
            << "property float scale_0\nproperty float scale_1\nproperty float scale_2\n"
            << "property float rot_0\nproperty float rot_1\nproperty float rot_2\nproperty float rot_3\n"
            << "end_header\n";
    }
    CHECK_THROWS_AS(read_gaussian_ply(dir / "bad.ply"), PlyError);
}

TEST_CASE("png rgb8: exact round trip on the 8-bit lattice") {
    const fs::path dir = temp_dir("png_rgb");
    Image img(7, 5);
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> byte(0, 255);
    for (auto& p : img.pixels)
        p = Vec3(byte(rng) / 255.0, byte(rng) / 255.0, byte(rng) / 255.0);
    write_png_rgb8(img, dir / "img.png");
    const Image back = read_png_rgb8(dir / "img.png");
    REQUIRE(back.width == 7);
    REQUIRE(back.height == 5);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        CHECK((back.pixels[i] - img.pixels[i]).norm() == 0.0);
}

TEST_CASE("png rgb8: out-of-range values clamp") {
    const fs::path dir = temp_dir("png_clamp");
    Image img(2, 1);
    img.pixels[0] = Vec3(-0.5, 2.0, 0.5);
    img.pixels[1] = Vec3(1.0, 0.0, 1.0);
    write_png_rgb8(img, dir / "c.png");
    const Image back = read_png_rgb8(dir / "c.png");
    CHECK(back.pixels[0].x() == 0.0);
    CHECK(back.pixels[0].y() == 1.0);
    CHECK(back.pixels[1].x() == 1.0);
}

TEST_CASE("png gray16: millimeter depth round trip") {
    const fs::path dir = temp_dir("png_gray");
    GrayImage depth(4, 3);
    depth.pixels = {0.0, 0.001, 0.5, 1.0, 2.5, 3.0, 10.0, 65.535, 0.0015, 70.0, 0.123, 2.999};
    write_png_gray16(depth, dir / "d.png", 0.001);
    const GrayImage back = read_png_gray16(dir / "d.png", 0.001);
    REQUIRE(back.width == 4);
    REQUIRE(back.height == 3);
    CHECK(back.pixels[0] == 0.0);                      // no-return stays zero
    CHECK(back.pixels[1] == doctest::Approx(0.001));   // one stored unit
    CHECK(back.pixels[4] == doctest::Approx(2.5));
    CHECK(back.pixels[7] == doctest::Approx(65.535));  // top of the 16-bit range
    CHECK(back.pixels[9] == doctest::Approx(65.535));  // saturates, does not wrap
    for (std::size_t i = 0; i < depth.pixels.size(); ++i)
        CHECK(std::abs(back.pixels[i] - std::min(depth.pixels[i], 65.535)) <= 0.0005 + 1e-12);
}

TEST_CASE("png: unreadable paths throw") {
    CHECK_THROWS_AS(read_png_rgb8("/nonexistent/file.png"), ImageIoError);
    CHECK_THROWS_AS(read_png_gray16("/nonexistent/file.png", 0.001), ImageIoError);
}

TEST_CASE("manifest: write and load round trip") {
    const fs::path dir = temp_dir("manifest");
    write_png_rgb8(Image(4, 4, Vec3::Constant(0.5)), dir / "rgb.png");
    GrayImage d(4, 4, 1.0);
    write_png_gray16(d, dir / "depth.png", 0.00025);

    Dataset dataset;
    dataset.world_frame = "test frame";
    RgbFrame rgb;
    rgb.image_path = dir / "rgb.png";
    rgb.intrinsics = {100, 110, 1.5, 2.0, 4, 4};
    rgb.pose.rotation = Quat(Eigen::AngleAxisd(0.3, Vec3(1, 1, 0).normalized()));
    rgb.pose.translation = Vec3(0.1, -0.2, 0.3);
    dataset.rgb.push_back(rgb);

    DepthFrameRef depth;
    depth.depth_path = dir / "depth.png";
    depth.intrinsics = rgb.intrinsics;
    depth.pose = rgb.pose;
    depth.depth_scale = 0.00025;
    dataset.depth.push_back(depth);

    write_manifest(dataset, dir / "dataset.json");
    CHECK(!fs::exists(dir / "dataset.json.tmp"));
    const Dataset back = load_dataset(dir / "dataset.json");
    REQUIRE(back.rgb.size() == 1);
    REQUIRE(back.depth.size() == 1);
    CHECK(back.world_frame == "test frame");
    CHECK(back.rgb[0].intrinsics.fx == 100);
    CHECK(back.rgb[0].intrinsics.fy == 110);
    CHECK((back.rgb[0].pose.translation - rgb.pose.translation).norm() < 1e-12);
    CHECK(back.rgb[0].pose.rotation.angularDistance(rgb.pose.rotation) < 1e-12);
    CHECK(back.depth[0].depth_scale == doctest::Approx(0.00025));
    // relative paths resolve against the manifest directory
    CHECK(fs::equivalent(back.depth[0].depth_path, dir / "depth.png"));

    const DepthFrame loaded = back.depth[0].load();
    CHECK(loaded.depth.size() == 16);
    CHECK(loaded.at(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("manifest: every problem is collected into one error") {
    const fs::path dir = temp_dir("manifest_bad");
    {
        std::ofstream out(dir / "dataset.json");
        out << R"({"schema": "holosplat-dataset/1", "rgb_frames": [
            {"image": "missing_a.png",
             "intrinsics": {"fx": 10, "fy": 10, "cx": 1, "cy": 1, "width": 4, "height": 4},
             "pose": {"rotation": [1,0,0,0], "translation": [0,0,0]}},
            {"image": "missing_b.png",
             "intrinsics": {"fx": -1, "fy": 10, "cx": 1, "cy": 1, "width": 4, "height": 4},
             "pose": {"rotation": [1,0,0,0], "translation": [0,0,0]}}
        ]})";
    }
    try {
        load_dataset(dir / "dataset.json");
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("missing_a.png") != std::string::npos);
        CHECK(msg.find("missing_b.png") != std::string::npos);
        CHECK(msg.find("invalid intrinsics") != std::string::npos);
    }
}

TEST_CASE("manifest: wrong schema is rejected") {
    const fs::path dir = temp_dir("manifest_schema");
    {
        std::ofstream out(dir / "dataset.json");
        out << R"({"schema": "something-else/9"})";
    }
    CHECK_THROWS_AS(load_dataset(dir / "dataset.json"), DatasetError);
}

TEST_CASE("raw float32 depth loads through DepthFrameRef") {
    const fs::path dir = temp_dir("raw_depth");
    const std::vector<float> raw = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f};
    {
        std::ofstream out(dir / "d.bin", std::ios::binary);
        out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size() * 4));
    }
    DepthFrameRef ref;
    ref.depth_path = dir / "d.bin";
    ref.intrinsics = {10, 10, 1, 1, 3, 2};
    ref.depth_scale = 1.0;
    const DepthFrame frame = ref.load();
    REQUIRE(frame.depth.size() == 6);
    CHECK(frame.at(1, 2) == doctest::Approx(6.0));

    ref.intrinsics.width = 4;  // expects more data than the file holds
    CHECK_THROWS_AS(ref.load(), DatasetError);
}

TEST_CASE("colmap: two-image text model imports with inverted poses") {
    const fs::path dir = temp_dir("colmap");
    {
        std::ofstream out(dir / "cameras.txt");
        out << "# Camera list\n"
            << "1 PINHOLE 640 480 500.0 510.0 320.0 240.0\n"
            << "2 SIMPLE_PINHOLE 320 240 250.0 160.0 120.0\n";
    }
    const Quat q1 = Quat(Eigen::AngleAxisd(0.4, Vec3(0, 1, 0)));
    const Quat q2 = Quat(Eigen::AngleAxisd(-0.25, Vec3(1, 0, 1).normalized()));
    const Vec3 t1(0.5, -0.125, 2.0), t2(-1.0, 0.25, 1.5);
    {
        std::ofstream out(dir / "images.txt");
        out.precision(17);
        out << "# Image list\n";
        out << "1 " << q1.w() << ' ' << q1.x() << ' ' << q1.y() << ' ' << q1.z() << ' '
            << t1.x() << ' ' << t1.y() << ' ' << t1.z() << " 1 frame1.png\n";
        out << "10.5 20.25 101 30.0 40.0 102\n";
        out << "2 " << q2.w() << ' ' << q2.x() << ' ' << q2.y() << ' ' << q2.z() << ' '
            << t2.x() << ' ' << t2.y() << ' ' << t2.z() << " 2 frame2.png\n";
        out << "1.0 2.0 101\n";
    }
    {
        std::ofstream out(dir / "points3D.txt");
        out << "# 3D point list\n"
            << "101 1.0 2.0 3.0 255 128 0 0.5 1 0 2 1\n"
            << "102 -1.0 0.5 2.0 0 64 255 0.25 1 1\n";
    }

    const ColmapImport import = import_colmap_text(dir);
    REQUIRE(import.frames.size() == 2);
    REQUIRE(import.cloud.size() == 2);

    CHECK(import.frames[0].intrinsics.fx == 500.0);
    CHECK(import.frames[0].intrinsics.fy == 510.0);
    CHECK(import.frames[1].intrinsics.fx == 250.0);
    CHECK(import.frames[1].intrinsics.fy == 250.0);
    CHECK(import.frames[0].image_path.filename() == "frame1.png");

    // stored world-to-camera; the import must hold camera-to-world
    Pose w2c1;
    w2c1.rotation = q1;
    w2c1.translation = t1;
    const Pose expect1 = invert_pose(w2c1);
    CHECK((import.frames[0].pose.translation - expect1.translation).norm() < 1e-9);
    CHECK(import.frames[0].pose.rotation.angularDistance(expect1.rotation) < 1e-9);

    Pose w2c2;
    w2c2.rotation = q2;
    w2c2.translation = t2;
    const Pose expect2 = invert_pose(w2c2);
    CHECK((import.frames[1].pose.translation - expect2.translation).norm() < 1e-9);
    CHECK(import.frames[1].pose.rotation.angularDistance(expect2.rotation) < 1e-9);

    CHECK((import.cloud.positions[0] - Vec3(1, 2, 3)).norm() == 0.0);
    CHECK(import.cloud.colors[0].x() == doctest::Approx(1.0));
    CHECK(import.cloud.colors[1].z() == doctest::Approx(1.0));
}

TEST_CASE("colmap: unsupported camera model throws") {
    const fs::path dir = temp_dir("colmap_bad");
    {
        std::ofstream out(dir / "cameras.txt");
        out << "1 OPENCV 640 480 500 500 320 240 0.1 0.1 0 0\n";
    }
    {
        std::ofstream out(dir / "images.txt");
    }
    {
        std::ofstream out(dir / "points3D.txt");
    }
    CHECK_THROWS_AS(import_colmap_text(dir), DatasetError);
}

TEST_CASE("synthetic: generator writes a loadable, consistent dataset") {
    const fs::path dir = temp_dir("synth");
    SyntheticSpec spec;
    spec.gaussians = 5;
    spec.views = 4;
    spec.width = spec.height = 32;
    spec.seed = 7;
    const SyntheticScene scene = generate_synthetic(spec, dir);

    CHECK(scene.ground_truth.size() == 5);
    const Dataset loaded = load_dataset(scene.manifest_path);
    CHECK(loaded.rgb.size() == 4);
    CHECK(loaded.depth.size() == 4);
    for (const auto& f : loaded.rgb) {
        const Image img = f.load();
        CHECK(img.width == 32);
        // cameras sit on a radius-2 hemisphere looking at the origin
        CHECK(f.pose.translation.norm() == doctest::Approx(2.0).epsilon(1e-9));
        const Vec3 forward = f.pose.rotation * Vec3(0, 0, 1);
        CHECK((forward + f.pose.translation.normalized()).norm() < 1e-9);
    }
    const GaussianSet gt = read_gaussian_ply(scene.ground_truth_ply);
    CHECK(gt.size() == 5);

    // same spec, same bytes
    const fs::path dir2 = temp_dir("synth2");
    generate_synthetic(spec, dir2);
    CHECK(slurp(dir / "rgb_000.png") == slurp(dir2 / "rgb_000.png"));
    CHECK(slurp(dir / "depth_003.png") == slurp(dir2 / "depth_003.png"));
}

TEST_CASE("synthetic: too few views or gaussians throws") {
    const fs::path dir = temp_dir("synth_bad");
    SyntheticSpec spec;
    spec.views = 3;
    CHECK_THROWS_AS(generate_synthetic(spec, dir), DatasetError);
    spec.views = 4;
    spec.gaussians = 2;
    CHECK_THROWS_AS(generate_synthetic(spec, dir), DatasetError);
}

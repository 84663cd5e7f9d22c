#include "holosplat/gaussians.hpp"
#include "holosplat/kdtree.hpp"
#include "holosplat/metrics.hpp"
#include "holosplat/rasterizer.hpp"
#include "holosplat/trainer.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace holosplat;

namespace {

CameraIntrinsics bench_intrinsics(int size) {
    CameraIntrinsics k;
    k.fx = k.fy = 1.1 * size;
    k.cx = k.cy = (size - 1) / 2.0;
    k.width = k.height = size;
    return k;
}

GaussianSet bench_scene(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> pos(-0.4, 0.4), depth(1.2, 2.8);
    std::uniform_real_distribution<double> scl(std::log(0.02), std::log(0.08));
    std::uniform_real_distribution<double> op(0.2, 0.9), col(0.1, 0.9);
    std::normal_distribution<double> normal;
    GaussianSet g;
    g.sh_degree = 0;
    g.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        g.centers[i] = Vec3(pos(rng), pos(rng), depth(rng));
        g.log_scales[i] = Vec3(scl(rng), scl(rng), scl(rng));
        g.rotations[i] = Eigen::Vector4d(normal(rng) + 1.0, normal(rng), normal(rng), normal(rng))
                             .normalized();
        g.opacity_logits[i] = logit(op(rng));
        g.sh_of(i)[0] = (Vec3(col(rng), col(rng), col(rng)) - Vec3::Constant(0.5)) /
                        0.28209479177387814;
    }
    return g;
}

Image bench_image(int size, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(size, size);
    for (auto& p : img.pixels) p = Vec3(u(rng), u(rng), u(rng));
    return img;
}

void BM_RenderForward(benchmark::State& state) {
    const auto g = bench_scene(std::size_t(state.range(0)), 1);
    const auto k = bench_intrinsics(int(state.range(1)));
    for (auto _ : state) {
        auto out = render(g, Pose::identity(), k, Vec3::Zero());
        benchmark::DoNotOptimize(out.image.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RenderForward)->Args({100, 64})->Args({1000, 64})->Args({1000, 256});

void BM_RenderBackward(benchmark::State& state) {
    const auto g = bench_scene(std::size_t(state.range(0)), 2);
    const auto k = bench_intrinsics(int(state.range(1)));
    const auto forward = render(g, Pose::identity(), k, Vec3::Zero());
    const std::vector<Vec3> dL(forward.image.size(), Vec3(0.3, -0.2, 0.1));
    for (auto _ : state) {
        auto grads = render_backward(g, Pose::identity(), k, Vec3::Zero(), forward, dL);
        benchmark::DoNotOptimize(grads.centers.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RenderBackward)->Args({100, 64})->Args({1000, 64})->Args({1000, 256});

void BM_Ssim(benchmark::State& state) {
    const int size = int(state.range(0));
    const Image a = bench_image(size, 3), b = bench_image(size, 4);
    for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

void BM_SsimGradient(benchmark::State& state) {
    const int size = int(state.range(0));
    const Image a = bench_image(size, 5), b = bench_image(size, 6);
    for (auto _ : state) {
        auto grad = ssim_gradient(a, b);
        benchmark::DoNotOptimize(grad.data());
    }
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_SsimGradient)->Arg(64)->Arg(256);

void BM_KdTreeBuild(benchmark::State& state) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> pts(std::size_t(state.range(0)));
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
    for (auto _ : state) {
        KdTree tree(pts);
        benchmark::DoNotOptimize(tree.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KdTreeBuild)->Arg(1000)->Arg(100000);

void BM_Chamfer(benchmark::State& state) {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PointCloud pred, ref;
    for (long i = 0; i < state.range(0); ++i) {
        pred.positions.emplace_back(u(rng), u(rng), u(rng));
        ref.positions.emplace_back(u(rng), u(rng), u(rng));
    }
    for (auto _ : state) {
        auto report = chamfer(pred, ref);
        benchmark::DoNotOptimize(report.mean);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Chamfer)->Arg(1000)->Arg(100000);

void BM_PhotometricLossGradient(benchmark::State& state) {
    const int size = int(state.range(0));
    const Image a = bench_image(size, 9), b = bench_image(size, 10);
    for (auto _ : state) {
        auto grad = photometric_loss_gradient(a, b, 0.2);
        benchmark::DoNotOptimize(grad.data());
    }
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_PhotometricLossGradient)->Arg(64)->Arg(256);

} // namespace

BENCHMARK_MAIN();

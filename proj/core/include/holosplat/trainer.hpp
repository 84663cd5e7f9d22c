#pragma once

#include "holosplat/dataset.hpp"
#include "holosplat/gaussians.hpp"
#include "holosplat/image.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace holosplat {

struct TrainConfig {
    int iterations = 30000;
    double lambda_dssim = 0.2;
    double lr_sh = 0.0025;
    double lr_opacity = 0.05;
    double lr_scale = 0.005;
    double lr_rotation = 0.001;
    // position lr decays exponentially from lr_position_init*extent to
    // lr_position_final*extent over the run
    double lr_position_init = 1.6e-4;
    double lr_position_final = 1.6e-6;
    int densify_interval = 100;
    int densify_from = 500;
    int densify_until = 15000;
    double densify_grad_threshold = 0.0002;
    double densify_clone_scale_factor = 0.01;  // of scene extent
    double densify_split_shrink = 1.6;
    double prune_opacity = 0.005;
    double prune_world_size_factor = 0.1;   // of scene extent
    double prune_screen_size = 0.0;          // px, 0 disables
    int opacity_reset_interval = 3000;
    int opacity_reset_until = 15000;
    double opacity_reset_ceiling = 0.01;
    Vec3 background = Vec3::Zero();
    int sh_degree = 0;
    unsigned seed = 0;
    int checkpoint_interval = 5000;
    std::string checkpoint_dir;  // empty disables checkpoints

    bool valid() const {
        return iterations >= 0 && lambda_dssim >= 0 && lambda_dssim <= 1 && lr_sh > 0 &&
               lr_opacity > 0 && lr_scale > 0 && lr_rotation > 0 && densify_interval > 0 &&
               opacity_reset_interval > 0;
    }
};

struct MetricsRecord {
    int iteration = 0;
    double loss = 0, l1 = 0, dssim = 0, psnr = 0;
    std::size_t gaussians = 0;
    double seconds = 0;
};

struct MetricsLog {
    std::vector<MetricsRecord> records;

    void write_csv(const std::filesystem::path& path) const;
};

inline constexpr const char* kMetricsCsvHeader = "iteration,loss,l1,dssim,psnr,count,seconds";
std::string metrics_csv_row(const MetricsRecord& r);

struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A posed training image, pixels in [0,1].
struct TrainView {
    Image image;
    CameraIntrinsics intrinsics;
    Pose pose;
};

struct PhotometricLoss {
    double total = 0, l1 = 0, dssim = 0;
};

/// L = (1-lambda)*L1 + lambda*(1-SSIM)/2. Throws on shape mismatch.
PhotometricLoss photometric_loss(const Image& rendered, const Image& ground_truth, double lambda);

/// dL/d(rendered), matching photometric_loss.
std::vector<Vec3> photometric_loss_gradient(const Image& rendered, const Image& ground_truth,
                                            double lambda);

/// Densification + pruning. mean_grads is the per-Gaussian mean accumulated
/// screen-space positional gradient norm; max_screen_radii the largest
/// footprint radius seen since the last call (px). source_rows maps each
/// output row to its input row (npos for freshly split children) so the
/// optimizer state can follow.
struct DensifyResult {
    GaussianSet set;
    std::vector<std::size_t> source_rows;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};
DensifyResult densify_and_prune(const GaussianSet& g, const std::vector<double>& mean_grads,
                                const std::vector<double>& max_screen_radii,
                                const TrainConfig& cfg, double scene_extent,
                                bool prune_oversized, std::mt19937& rng);

/// Clamps every opacity to at most ceiling (in logit space).
void reset_opacity(GaussianSet& g, double ceiling);

/// Radius of the bounding sphere of the camera centers (the paper-style
/// scene extent used for learning rates and densification thresholds).
double scene_extent(const std::vector<TrainView>& views);

struct TrainResult {
    GaussianSet model;
    MetricsLog log;
};

/// The optimization loop. Deterministic given cfg.seed; per-iteration
/// records are also passed to on_iteration when provided (for streaming
/// CSV output). Throws TrainingDiverged on NaN loss after writing a
/// last-good checkpoint when checkpointing is enabled.
TrainResult train(const std::vector<TrainView>& views, GaussianSet init, const TrainConfig& cfg,
                  const std::function<void(const MetricsRecord&)>& on_iteration = {});

} // namespace holosplat

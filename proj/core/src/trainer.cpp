#include "holosplat/trainer.hpp"
#include "holosplat/adam.hpp"
#include "holosplat/metrics.hpp"
#include "holosplat/ply.hpp"
#include "holosplat/rasterizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace holosplat {

std::string metrics_csv_row(const MetricsRecord& r) {
    std::ostringstream ss;
    ss.precision(17);
    ss << r.iteration << ',' << r.loss << ',' << r.l1 << ',' << r.dssim << ',' << r.psnr << ','
       << r.gaussians << ',' << r.seconds;
    return ss.str();
}

void MetricsLog::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    out << kMetricsCsvHeader << "\n";
    for (const auto& r : records) out << metrics_csv_row(r) << "\n";
}

PhotometricLoss photometric_loss(const Image& rendered, const Image& gt, double lambda) {
    if (rendered.width != gt.width || rendered.height != gt.height)
        throw std::invalid_argument("photometric_loss: image shapes differ");
    PhotometricLoss out;
    double abs_sum = 0;
    for (std::size_t i = 0; i < rendered.pixel_count(); ++i)
        abs_sum += (rendered.pixels[i] - gt.pixels[i]).cwiseAbs().sum();
    out.l1 = abs_sum / (double(rendered.pixel_count()) * 3.0);
    out.dssim = lambda > 0 ? holosplat::dssim(rendered, gt) : 0.0;
    out.total = (1.0 - lambda) * out.l1 + lambda * out.dssim;
    return out;
}

std::vector<Vec3> photometric_loss_gradient(const Image& rendered, const Image& gt,
                                            double lambda) {
    if (rendered.width != gt.width || rendered.height != gt.height)
        throw std::invalid_argument("photometric_loss_gradient: image shapes differ");
    const double l1_w = (1.0 - lambda) / (double(rendered.pixel_count()) * 3.0);
    std::vector<Vec3> grad(rendered.pixel_count(), Vec3::Zero());
    for (std::size_t i = 0; i < rendered.pixel_count(); ++i) {
        const Vec3 diff = rendered.pixels[i] - gt.pixels[i];
        for (int ch = 0; ch < 3; ++ch)
            grad[i][ch] = diff[ch] > 0 ? l1_w : (diff[ch] < 0 ? -l1_w : 0.0);
    }
    if (lambda > 0) {
        const auto ssim_grad = ssim_gradient(rendered, gt);
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad[i] += lambda * (-0.5) * ssim_grad[i];  // d dssim = -0.5 d ssim
    }
    return grad;
}

void reset_opacity(GaussianSet& g, double ceiling) {
    const double ceiling_logit = logit(ceiling);
    for (double& o : g.opacity_logits) o = std::min(o, ceiling_logit);
}

double scene_extent(const std::vector<TrainView>& views) {
    if (views.empty()) return 1.0;
    Vec3 center = Vec3::Zero();
    for (const auto& v : views) center += v.pose.translation;
    center /= double(views.size());
    double radius = 0;
    for (const auto& v : views)
        radius = std::max(radius, (v.pose.translation - center).norm());
    return radius > 0 ? radius : 1.0;
}

DensifyResult densify_and_prune(const GaussianSet& g, const std::vector<double>& mean_grads,
                                const std::vector<double>& max_screen_radii,
                                const TrainConfig& cfg, double extent, bool prune_oversized,
                                std::mt19937& rng) {
    if (mean_grads.size() != g.size() || max_screen_radii.size() != g.size())
        throw std::invalid_argument("densify_and_prune: accumulator length mismatch");

    DensifyResult result;
    GaussianSet& out = result.set;
    out.sh_degree = g.sh_degree;
    const int basis = g.sh_basis();
    std::normal_distribution<double> gauss01(0.0, 1.0);

    auto append_from = [&](std::size_t src, std::size_t source_row) {
        out.centers.push_back(g.centers[src]);
        out.log_scales.push_back(g.log_scales[src]);
        out.rotations.push_back(g.rotations[src]);
        out.opacity_logits.push_back(g.opacity_logits[src]);
        for (int b = 0; b < basis; ++b) out.sh_coeffs.push_back(g.sh_of(src)[b]);
        result.source_rows.push_back(source_row);
    };

    for (std::size_t i = 0; i < g.size(); ++i) {
        const double opacity = g.opacity(i);
        const Vec3 scale = g.scale(i);
        const double max_scale = scale.maxCoeff();

        bool pruned = opacity < cfg.prune_opacity;
        if (prune_oversized) {
            if (cfg.prune_world_size_factor > 0 && max_scale > cfg.prune_world_size_factor * extent)
                pruned = true;
            if (cfg.prune_screen_size > 0 && max_screen_radii[i] > cfg.prune_screen_size)
                pruned = true;
        }
        if (pruned) continue;

        const bool densify = mean_grads[i] > cfg.densify_grad_threshold;
        if (!densify) {
            append_from(i, i);
            continue;
        }
        if (max_scale < cfg.densify_clone_scale_factor * extent) {
            // clone: duplicate in place, optimizer state follows both copies
            append_from(i, i);
            append_from(i, i);
        } else {
            // split: two children sampled inside the parent, scales shrunk
            const Mat3 rot = quat_to_rotation(g.rotations[i]);
            const Vec3 child_log_scale =
                g.log_scales[i] - Vec3::Constant(std::log(cfg.densify_split_shrink));
            for (int c = 0; c < 2; ++c) {
                const Vec3 sample(gauss01(rng) * scale.x(), gauss01(rng) * scale.y(),
                                  gauss01(rng) * scale.z());
                out.centers.push_back(g.centers[i] + rot * sample);
                out.log_scales.push_back(child_log_scale);
                out.rotations.push_back(g.rotations[i]);
                out.opacity_logits.push_back(g.opacity_logits[i]);
                for (int b = 0; b < basis; ++b) out.sh_coeffs.push_back(g.sh_of(i)[b]);
                result.source_rows.push_back(DensifyResult::npos);
            }
        }
    }
    return result;
}

namespace {

std::span<double> flat(std::vector<Vec3>& v) {
    return {reinterpret_cast<double*>(v.data()), v.size() * 3};
}
std::span<const double> flat(const std::vector<Vec3>& v) {
    return {reinterpret_cast<const double*>(v.data()), v.size() * 3};
}
std::span<double> flat4(std::vector<Eigen::Vector4d>& v) {
    return {reinterpret_cast<double*>(v.data()), v.size() * 4};
}
std::span<const double> flat4(const std::vector<Eigen::Vector4d>& v) {
    return {reinterpret_cast<const double*>(v.data()), v.size() * 4};
}

struct Optimizers {
    Adam positions, log_scales, rotations, opacities, sh;

    void remap(const std::vector<std::size_t>& rows, int sh_basis) {
        positions.remap_rows(rows, 3);
        log_scales.remap_rows(rows, 3);
        rotations.remap_rows(rows, 4);
        opacities.remap_rows(rows, 1);
        sh.remap_rows(rows, std::size_t(sh_basis) * 3);
    }
};

} // namespace

TrainResult train(const std::vector<TrainView>& views, GaussianSet init, const TrainConfig& cfg,
                  const std::function<void(const MetricsRecord&)>& on_iteration) {
    if (views.empty()) throw std::invalid_argument("train: no training views");
    if (init.size() == 0) throw std::invalid_argument("train: empty initialization");
    if (!cfg.valid()) throw std::invalid_argument("train: invalid config");

    TrainResult result;
    result.model = std::move(init);
    GaussianSet& model = result.model;
    if (cfg.iterations == 0) return result;

    const double extent = scene_extent(views);
    const double lr_pos_init = cfg.lr_position_init * extent;
    const double lr_pos_final = cfg.lr_position_final * extent;

    std::mt19937 rng(cfg.seed);
    Optimizers opt;

    std::vector<double> grad_accum(model.size(), 0.0);
    std::vector<double> seen_count(model.size(), 0.0);
    std::vector<double> max_radii(model.size(), 0.0);

    std::vector<std::size_t> view_order(views.size());
    std::iota(view_order.begin(), view_order.end(), std::size_t{0});
    std::size_t epoch_pos = view_order.size();  // forces a shuffle on first use

    const auto t0 = std::chrono::steady_clock::now();
    const bool checkpointing = !cfg.checkpoint_dir.empty();
    if (checkpointing) std::filesystem::create_directories(cfg.checkpoint_dir);
    auto checkpoint_path = [&](const std::string& stem) {
        return std::filesystem::path(cfg.checkpoint_dir) / (stem + ".ply");
    };

    for (int iter = 1; iter <= cfg.iterations; ++iter) {
        if (epoch_pos >= view_order.size()) {
            std::shuffle(view_order.begin(), view_order.end(), rng);
            epoch_pos = 0;
        }
        const TrainView& view = views[view_order[epoch_pos++]];

        // reset before this iteration's render so the loss spike lands on the
        // reset iteration itself
        if (iter % cfg.opacity_reset_interval == 0 && iter <= cfg.opacity_reset_until) {
            reset_opacity(model, cfg.opacity_reset_ceiling);
            opt.opacities.zero_moments();
        }

        const RenderOutput rendered = render(model, view.pose, view.intrinsics, cfg.background);
        Image rendered_img(view.intrinsics.width, view.intrinsics.height);
        rendered_img.pixels = rendered.image;

        const PhotometricLoss loss = photometric_loss(rendered_img, view.image, cfg.lambda_dssim);
        if (!std::isfinite(loss.total)) {
            if (checkpointing) write_gaussian_ply(model, checkpoint_path("last_good"));
            throw TrainingDiverged("train: non-finite loss at iteration " + std::to_string(iter));
        }

        const auto image_grad = photometric_loss_gradient(rendered_img, view.image, cfg.lambda_dssim);
        const RenderGrads grads = render_backward(model, view.pose, view.intrinsics,
                                                  cfg.background, rendered, image_grad);

        for (std::size_t i = 0; i < model.size(); ++i) {
            if (grads.screen_radius[i] > 0) {
                grad_accum[i] += grads.screen_position[i].norm();
                seen_count[i] += 1.0;
                max_radii[i] = std::max(max_radii[i], grads.screen_radius[i]);
            }
        }

        const double progress = cfg.iterations > 1 ? double(iter - 1) / double(cfg.iterations - 1) : 0.0;
        const double lr_pos = lr_pos_init * std::pow(lr_pos_final / lr_pos_init, progress);
        opt.positions.step(flat(model.centers), flat(grads.centers), lr_pos);
        opt.log_scales.step(flat(model.log_scales), flat(grads.log_scales), cfg.lr_scale);
        opt.rotations.step(flat4(model.rotations), flat4(grads.rotations), cfg.lr_rotation);
        opt.opacities.step(model.opacity_logits, grads.opacity_logits, cfg.lr_opacity);
        opt.sh.step(flat(model.sh_coeffs), flat(grads.sh_coeffs), cfg.lr_sh);
        model.normalize_rotations();

        if (iter >= cfg.densify_from && iter <= cfg.densify_until &&
            iter % cfg.densify_interval == 0) {
            std::vector<double> mean_grads(model.size(), 0.0);
            for (std::size_t i = 0; i < model.size(); ++i)
                if (seen_count[i] > 0) mean_grads[i] = grad_accum[i] / seen_count[i];
            const bool prune_oversized = iter > cfg.opacity_reset_interval;
            DensifyResult densified = densify_and_prune(model, mean_grads, max_radii, cfg,
                                                        extent, prune_oversized, rng);
            if (densified.set.size() > 0) {  // never drop the whole scene
                model = std::move(densified.set);
                opt.remap(densified.source_rows, model.sh_basis());
            }
            grad_accum.assign(model.size(), 0.0);
            seen_count.assign(model.size(), 0.0);
            max_radii.assign(model.size(), 0.0);
        }

        MetricsRecord record;
        record.iteration = iter;
        record.loss = loss.total;
        record.l1 = loss.l1;
        record.dssim = loss.dssim;
        record.psnr = psnr(rendered_img, view.image);
        record.gaussians = model.size();
        record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.records.push_back(record);
        if (on_iteration) on_iteration(record);

        if (checkpointing && cfg.checkpoint_interval > 0 && iter % cfg.checkpoint_interval == 0)
            write_gaussian_ply(model, checkpoint_path("checkpoint_" + std::to_string(iter)));
    }

    return result;
}

} // namespace holosplat

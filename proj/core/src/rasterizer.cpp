#include "holosplat/rasterizer.hpp"
#include "holosplat/threading.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace holosplat {

namespace {

constexpr double kNearPlane = 0.01;       // meters
constexpr double kDilation = 0.3;         // px^2 added to cov2d diagonal
constexpr double kDetFloor = 1e-12;
constexpr double kAlphaClamp = 0.99;
constexpr double kTransmittanceCutoff = 1e-4;
constexpr int kTileSize = 16;
constexpr double kFootprintSigmas = 3.0;

struct VisibleSplat {
    std::uint32_t gaussian;
    Vec3 p_cam;
    Vec2 mean2d;
    Mat2 cov2d;   // dilated
    Mat2 conic;   // cov2d^-1
    double depth;
    Vec3 color;
    bool clamped[3];
    Vec3 view_dir;
    double view_len;
    double opacity;
    double radius;             // 3-sigma footprint, px
    int x0, x1, y0, y1;        // inclusive pixel bbox
};

struct Projected {
    bool visible = false;
    VisibleSplat splat;
};

// Full projection with the intermediates the backward pass needs.
Projected project_one(const Vec3& center, const Vec3& log_scale, const Eigen::Vector4d& rotation,
                      double opacity_logit, const Vec3* sh, int sh_degree,
                      const WorldToCamera& wc, const Vec3& cam_pos, const CameraIntrinsics& k) {
    Projected out;
    VisibleSplat& s = out.splat;

    s.p_cam = wc.apply(center);
    const double z = s.p_cam.z();
    if (z <= kNearPlane) return out;

    s.depth = z;
    s.mean2d = Vec2(k.fx * s.p_cam.x() / z + k.cx, k.fy * s.p_cam.y() / z + k.cy);

    const Mat3 sigma = covariance_3d(log_scale, rotation);
    const Mat3 cam_cov = wc.rotation * sigma * wc.rotation.transpose();

    Eigen::Matrix<double, 2, 3> jac;
    jac << k.fx / z, 0, -k.fx * s.p_cam.x() / (z * z),
           0, k.fy / z, -k.fy * s.p_cam.y() / (z * z);
    s.cov2d = jac * cam_cov * jac.transpose();
    s.cov2d(0, 0) += kDilation;
    s.cov2d(1, 1) += kDilation;

    const double det = s.cov2d.determinant();
    if (det < kDetFloor) return out;
    s.conic << s.cov2d(1, 1), -s.cov2d(0, 1), -s.cov2d(1, 0), s.cov2d(0, 0);
    s.conic /= det;

    const double mid = 0.5 * (s.cov2d(0, 0) + s.cov2d(1, 1));
    const double lmax = mid + std::sqrt(std::max(0.0, mid * mid - det));
    s.radius = kFootprintSigmas * std::sqrt(lmax);

    s.x0 = std::max(0, int(std::floor(s.mean2d.x() - s.radius)));
    s.x1 = std::min(k.width - 1, int(std::ceil(s.mean2d.x() + s.radius)));
    s.y0 = std::max(0, int(std::floor(s.mean2d.y() - s.radius)));
    s.y1 = std::min(k.height - 1, int(std::ceil(s.mean2d.y() + s.radius)));
    if (s.x0 > s.x1 || s.y0 > s.y1) return out;

    const Vec3 view = center - cam_pos;
    s.view_len = view.norm();
    s.view_dir = view / s.view_len;

    double basis[kMaxShBasis];
    sh_basis(s.view_dir, sh_degree, basis);
    Vec3 raw = Vec3::Constant(0.5);
    for (int b = 0; b < sh_basis_size(sh_degree); ++b) raw += basis[b] * sh[b];
    for (int ch = 0; ch < 3; ++ch) {
        s.clamped[ch] = raw[ch] < 0.0 || raw[ch] > 1.0;
        s.color[ch] = std::clamp(raw[ch], 0.0, 1.0);
    }

    s.opacity = sigmoid(opacity_logit);
    out.visible = true;
    return out;
}

struct TileAux {
    int px0, py0, pw, ph;               // pixel rect
    std::vector<std::uint32_t> splats;  // visible-splat indices, depth order
    std::vector<std::uint32_t> contrib; // flat per-pixel contributor lists
    std::vector<std::uint32_t> offsets; // pw*ph + 1 entries
};

} // namespace

struct RenderAux {
    std::vector<VisibleSplat> splats;
    std::vector<TileAux> tiles;
    int tiles_x = 0, tiles_y = 0;
    std::size_t gaussian_count = 0;
};

std::optional<Splat2D> project_gaussian(const Vec3& center, const Vec3& log_scale,
                                        const Eigen::Vector4d& rotation, double opacity_logit,
                                        const Vec3* sh, int sh_degree, const Pose& pose,
                                        const CameraIntrinsics& k) {
    const WorldToCamera wc(pose);
    const Projected p =
        project_one(center, log_scale, rotation, opacity_logit, sh, sh_degree, wc, pose.translation, k);
    if (!p.visible) return std::nullopt;
    return Splat2D{p.splat.mean2d, p.splat.cov2d, p.splat.depth, p.splat.color, p.splat.opacity};
}

RenderOutput render(const GaussianSet& g, const Pose& pose, const CameraIntrinsics& k,
                    const Vec3& background) {
    const std::size_t n = g.size();
    auto aux = std::make_shared<RenderAux>();
    aux->gaussian_count = n;

    const WorldToCamera wc(pose);
    std::vector<Projected> projected(n);
    parallel_for(n, [&](std::size_t i) {
        projected[i] = project_one(g.centers[i], g.log_scales[i], g.rotations[i],
                                   g.opacity_logits[i], g.sh_of(i), g.sh_degree, wc,
                                   pose.translation, k);
        projected[i].splat.gaussian = std::uint32_t(i);
    });

    for (auto& p : projected)
        if (p.visible) aux->splats.push_back(p.splat);
    std::stable_sort(aux->splats.begin(), aux->splats.end(),
                     [](const VisibleSplat& a, const VisibleSplat& b) {
                         if (a.depth != b.depth) return a.depth < b.depth;
                         return a.gaussian < b.gaussian;
                     });

    aux->tiles_x = (k.width + kTileSize - 1) / kTileSize;
    aux->tiles_y = (k.height + kTileSize - 1) / kTileSize;
    aux->tiles.resize(std::size_t(aux->tiles_x) * aux->tiles_y);
    for (int ty = 0; ty < aux->tiles_y; ++ty) {
        for (int tx = 0; tx < aux->tiles_x; ++tx) {
            TileAux& tile = aux->tiles[std::size_t(ty) * aux->tiles_x + tx];
            tile.px0 = tx * kTileSize;
            tile.py0 = ty * kTileSize;
            tile.pw = std::min(kTileSize, k.width - tile.px0);
            tile.ph = std::min(kTileSize, k.height - tile.py0);
        }
    }
    for (std::uint32_t si = 0; si < aux->splats.size(); ++si) {
        const VisibleSplat& s = aux->splats[si];
        for (int ty = s.y0 / kTileSize; ty <= s.y1 / kTileSize; ++ty)
            for (int tx = s.x0 / kTileSize; tx <= s.x1 / kTileSize; ++tx)
                aux->tiles[std::size_t(ty) * aux->tiles_x + tx].splats.push_back(si);
    }

    RenderOutput out;
    out.width = k.width;
    out.height = k.height;
    out.image.assign(std::size_t(k.width) * k.height, background);
    out.alpha.assign(std::size_t(k.width) * k.height, 0.0);
    out.depth.assign(std::size_t(k.width) * k.height, 0.0);

    parallel_for(aux->tiles.size(), [&](std::size_t ti) {
        TileAux& tile = aux->tiles[ti];
        tile.offsets.assign(std::size_t(tile.pw) * tile.ph + 1, 0);
        std::uint32_t local_pixel = 0;
        for (int py = 0; py < tile.ph; ++py) {
            for (int px = 0; px < tile.pw; ++px, ++local_pixel) {
                const int x = tile.px0 + px, y = tile.py0 + py;
                const Vec2 pix{double(x), double(y)};
                Vec3 color = Vec3::Zero();
                double t = 1.0;
                double best_weight = 0.0, best_depth = 0.0;
                for (std::uint32_t si : tile.splats) {
                    const VisibleSplat& s = aux->splats[si];
                    if (x < s.x0 || x > s.x1 || y < s.y0 || y > s.y1) continue;
                    const Vec2 d = pix - s.mean2d;
                    const double power = -0.5 * d.dot(s.conic * d);
                    const double alpha = std::min(s.opacity * std::exp(power), kAlphaClamp);
                    const double weight = alpha * t;
                    color += weight * s.color;
                    if (weight > best_weight) {
                        best_weight = weight;
                        best_depth = s.depth;
                    }
                    t *= 1.0 - alpha;
                    tile.contrib.push_back(si);
                    if (t < kTransmittanceCutoff) break;
                }
                const std::size_t pix_idx = std::size_t(y) * k.width + x;
                out.image[pix_idx] = color + t * background;
                out.alpha[pix_idx] = 1.0 - t;
                out.depth[pix_idx] = best_depth;
                tile.offsets[local_pixel + 1] = std::uint32_t(tile.contrib.size());
            }
        }
    });

    out.aux = aux;
    return out;
}

RenderGrads render_backward(const GaussianSet& g, const Pose& pose, const CameraIntrinsics& k,
                            const Vec3& background, const RenderOutput& forward,
                            const std::vector<Vec3>& dL_dimage) {
    const RenderAux* aux = forward.aux.get();
    if (!aux || aux->gaussian_count != g.size() || forward.width != k.width ||
        forward.height != k.height || dL_dimage.size() != std::size_t(k.width) * k.height)
        throw std::invalid_argument("render_backward: aux does not match inputs");

    const std::size_t n_splats = aux->splats.size();

    // per-splat accumulators in screen space
    struct SplatGrad {
        Vec3 color = Vec3::Zero();
        Vec2 mean2d = Vec2::Zero();
        Mat2 cov2d = Mat2::Zero();
        double opacity = 0;
    };
    std::vector<SplatGrad> accum(n_splats);

    // tile-local accumulation, then a serial reduction in tile order so the
    // result does not depend on the thread count
    std::vector<std::vector<SplatGrad>> tile_grads(aux->tiles.size());
    parallel_for(aux->tiles.size(), [&](std::size_t ti) {
        const TileAux& tile = aux->tiles[ti];
        if (tile.contrib.empty()) return;
        std::vector<SplatGrad>& local = tile_grads[ti];
        local.resize(tile.splats.size());
        // tile.splats holds ascending visible-splat indices by construction
        auto slot_of = [&](std::uint32_t si) {
            return std::size_t(std::lower_bound(tile.splats.begin(), tile.splats.end(), si) -
                               tile.splats.begin());
        };

        std::uint32_t local_pixel = 0;
        std::vector<double> alphas, weights;
        for (int py = 0; py < tile.ph; ++py) {
            for (int px = 0; px < tile.pw; ++px, ++local_pixel) {
                const std::uint32_t begin = tile.offsets[local_pixel];
                const std::uint32_t end = tile.offsets[local_pixel + 1];
                if (begin == end) continue;
                const int x = tile.px0 + px, y = tile.py0 + py;
                const Vec2 pix{double(x), double(y)};
                const Vec3 dL_dC = dL_dimage[std::size_t(y) * k.width + x];
                if (dL_dC.isZero(0.0)) continue;

                // replay the forward compositing over the stored contributors
                alphas.clear();
                weights.clear();
                double t = 1.0;
                for (std::uint32_t c = begin; c < end; ++c) {
                    const VisibleSplat& s = aux->splats[tile.contrib[c]];
                    const Vec2 d = pix - s.mean2d;
                    const double power = -0.5 * d.dot(s.conic * d);
                    const double alpha = std::min(s.opacity * std::exp(power), kAlphaClamp);
                    alphas.push_back(alpha);
                    weights.push_back(t);  // T_i before this splat
                    t *= 1.0 - alpha;
                }

                // suffix S_i = sum_{j>i} c_j a_j T_j + bg * T_final
                Vec3 suffix = t * background;
                for (std::uint32_t c = end; c-- > begin;) {
                    const std::uint32_t si = tile.contrib[c];
                    const VisibleSplat& s = aux->splats[si];
                    const std::size_t i = c - begin;
                    const double alpha = alphas[i];
                    const double t_i = weights[i];
                    SplatGrad& sg = local[slot_of(si)];

                    sg.color += alpha * t_i * dL_dC;
                    const double d_alpha =
                        dL_dC.dot(s.color * t_i - suffix / (1.0 - alpha));
                    suffix += s.color * alpha * t_i;

                    const Vec2 d = pix - s.mean2d;
                    const double gauss = std::exp(-0.5 * d.dot(s.conic * d));
                    if (s.opacity * gauss < kAlphaClamp) {  // clamp kills the gradient
                        sg.opacity += gauss * d_alpha;
                        const double d_power = s.opacity * gauss * d_alpha;
                        const Vec2 cd = s.conic * d;
                        sg.mean2d += d_power * cd;
                        sg.cov2d += (0.5 * d_power) * (cd * cd.transpose());
                    }
                }
            }
        }
    });
    for (std::size_t ti = 0; ti < aux->tiles.size(); ++ti) {
        if (tile_grads[ti].empty()) continue;
        const TileAux& tile = aux->tiles[ti];
        for (std::size_t s = 0; s < tile.splats.size(); ++s) {
            SplatGrad& dst = accum[tile.splats[s]];
            const SplatGrad& src = tile_grads[ti][s];
            dst.color += src.color;
            dst.mean2d += src.mean2d;
            dst.cov2d += src.cov2d;
            dst.opacity += src.opacity;
        }
    }

    RenderGrads grads;
    grads.centers.assign(g.size(), Vec3::Zero());
    grads.log_scales.assign(g.size(), Vec3::Zero());
    grads.rotations.assign(g.size(), Eigen::Vector4d::Zero());
    grads.opacity_logits.assign(g.size(), 0.0);
    grads.sh_coeffs.assign(g.sh_coeffs.size(), Vec3::Zero());
    grads.screen_position.assign(g.size(), Vec2::Zero());
    grads.screen_radius.assign(g.size(), 0.0);

    const WorldToCamera wc(pose);
    parallel_for(n_splats, [&](std::size_t si) {
        const VisibleSplat& s = aux->splats[si];
        const SplatGrad& sg = accum[si];
        const std::size_t gi = s.gaussian;

        grads.screen_position[gi] = sg.mean2d;
        grads.screen_radius[gi] = s.radius;

        // opacity logit
        grads.opacity_logits[gi] = sg.opacity * s.opacity * (1.0 - s.opacity);

        // SH color chain; clamped channels are flat
        Vec3 d_color = sg.color;
        for (int ch = 0; ch < 3; ++ch)
            if (s.clamped[ch]) d_color[ch] = 0.0;
        double basis[kMaxShBasis];
        Vec3 basis_grad[kMaxShBasis];
        sh_basis(s.view_dir, g.sh_degree, basis);
        sh_basis_gradient(s.view_dir, g.sh_degree, basis_grad);
        const Vec3* coeffs = g.sh_of(gi);
        Vec3 d_dir = Vec3::Zero();
        for (int b = 0; b < g.sh_basis(); ++b) {
            grads.sh_coeffs[gi * g.sh_basis() + b] = basis[b] * d_color;
            d_dir += coeffs[b].dot(d_color) * basis_grad[b];
        }
        // dir = v / |v|, v = center - cam_pos
        Vec3 d_center =
            (d_dir - s.view_dir * s.view_dir.dot(d_dir)) / s.view_len;

        // cov2d = J * V * J^T + dilation, V = W * Sigma * W^T
        const double z = s.p_cam.z();
        Eigen::Matrix<double, 2, 3> jac;
        jac << k.fx / z, 0, -k.fx * s.p_cam.x() / (z * z),
               0, k.fy / z, -k.fy * s.p_cam.y() / (z * z);
        const Mat3 sigma = covariance_3d(g.log_scales[gi], g.rotations[gi]);
        const Mat3 cam_cov = wc.rotation * sigma * wc.rotation.transpose();

        const Mat3 d_cam_cov = jac.transpose() * sg.cov2d * jac;
        const Eigen::Matrix<double, 2, 3> d_jac = 2.0 * sg.cov2d * jac * cam_cov;
        const Mat3 d_sigma = wc.rotation.transpose() * d_cam_cov * wc.rotation;

        // Sigma = M M^T, M = R S
        const Mat3 rot = quat_to_rotation(g.rotations[gi]);
        const Vec3 scale = g.log_scales[gi].array().exp();
        const Mat3 m = rot * scale.asDiagonal();
        const Mat3 d_m = 2.0 * d_sigma * m;
        const Mat3 d_rot = d_m * scale.asDiagonal();
        for (int a = 0; a < 3; ++a)
            grads.log_scales[gi][a] = scale[a] * d_m.col(a).dot(rot.col(a));
        const auto quat_jac = quat_to_rotation_jacobian(g.rotations[gi]);
        for (int c = 0; c < 4; ++c)
            grads.rotations[gi][c] = (d_rot.array() * quat_jac[c].array()).sum();

        // p_cam chain: screen mean and the projection Jacobian entries
        Vec3 d_pcam = Vec3::Zero();
        d_pcam.x() += k.fx / z * sg.mean2d.x();
        d_pcam.y() += k.fy / z * sg.mean2d.y();
        d_pcam.z() += -k.fx * s.p_cam.x() / (z * z) * sg.mean2d.x() -
                      k.fy * s.p_cam.y() / (z * z) * sg.mean2d.y();
        d_pcam.x() += d_jac(0, 2) * (-k.fx / (z * z));
        d_pcam.y() += d_jac(1, 2) * (-k.fy / (z * z));
        d_pcam.z() += d_jac(0, 0) * (-k.fx / (z * z)) + d_jac(1, 1) * (-k.fy / (z * z)) +
                      d_jac(0, 2) * (2.0 * k.fx * s.p_cam.x() / (z * z * z)) +
                      d_jac(1, 2) * (2.0 * k.fy * s.p_cam.y() / (z * z * z));

        d_center += wc.rotation.transpose() * d_pcam;
        grads.centers[gi] = d_center;
    });

    return grads;
}

} // namespace holosplat

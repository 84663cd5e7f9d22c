#include "holosplat/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace holosplat {

namespace {

constexpr int kWindow = 11;
constexpr int kHalf = kWindow / 2;
constexpr double kSigma = 1.5;

std::array<double, kWindow> window_kernel() {
    std::array<double, kWindow> k{};
    double sum = 0;
    for (int i = 0; i < kWindow; ++i) {
        const double x = i - kHalf;
        k[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// zero-padded separable correlation with the Gaussian window
std::vector<double> blur(const std::vector<double>& in, int w, int h) {
    static const auto kernel = window_kernel();
    std::vector<double> tmp(in.size(), 0.0), out(in.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int o = -kHalf; o <= kHalf; ++o) {
                const int xx = x + o;
                if (xx < 0 || xx >= w) continue;
                acc += kernel[o + kHalf] * in[std::size_t(y) * w + xx];
            }
            tmp[std::size_t(y) * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int o = -kHalf; o <= kHalf; ++o) {
                const int yy = y + o;
                if (yy < 0 || yy >= h) continue;
                acc += kernel[o + kHalf] * tmp[std::size_t(yy) * w + x];
            }
            out[std::size_t(y) * w + x] = acc;
        }
    }
    return out;
}

struct Plane {
    std::vector<double> a, b;
};

Plane channel_planes(const Image& ia, const Image& ib, int ch) {
    Plane p;
    p.a.resize(ia.pixel_count());
    p.b.resize(ia.pixel_count());
    for (std::size_t i = 0; i < ia.pixel_count(); ++i) {
        p.a[i] = ia.pixels[i][ch];
        p.b[i] = ib.pixels[i][ch];
    }
    return p;
}

void check_shapes(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("ssim: image shapes differ");
    if (a.width < kWindow || a.height < kWindow)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
}

} // namespace

double ssim(const Image& ia, const Image& ib, double peak) {
    check_shapes(ia, ib);
    const int w = ia.width, h = ia.height;
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);

    double total = 0;
    for (int ch = 0; ch < 3; ++ch) {
        const Plane p = channel_planes(ia, ib, ch);
        std::vector<double> aa(p.a.size()), bb(p.a.size()), ab(p.a.size());
        for (std::size_t i = 0; i < p.a.size(); ++i) {
            aa[i] = p.a[i] * p.a[i];
            bb[i] = p.b[i] * p.b[i];
            ab[i] = p.a[i] * p.b[i];
        }
        const auto mu_a = blur(p.a, w, h), mu_b = blur(p.b, w, h);
        const auto m_aa = blur(aa, w, h), m_bb = blur(bb, w, h), m_ab = blur(ab, w, h);

        double sum = 0;
        std::size_t count = 0;
        for (int y = kHalf; y < h - kHalf; ++y) {
            for (int x = kHalf; x < w - kHalf; ++x) {
                const std::size_t i = std::size_t(y) * w + x;
                const double va = m_aa[i] - mu_a[i] * mu_a[i];
                const double vb = m_bb[i] - mu_b[i] * mu_b[i];
                const double cov = m_ab[i] - mu_a[i] * mu_b[i];
                const double num = (2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2);
                const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
                sum += num / den;
                ++count;
            }
        }
        total += sum / double(count);
    }
    return total / 3.0;
}

std::vector<Vec3> ssim_gradient(const Image& ia, const Image& ib, double peak) {
    check_shapes(ia, ib);
    const int w = ia.width, h = ia.height;
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const std::size_t valid =
        std::size_t(w - 2 * kHalf) * std::size_t(h - 2 * kHalf);
    const double norm = 1.0 / (double(valid) * 3.0);

    std::vector<Vec3> grad(ia.pixel_count(), Vec3::Zero());
    for (int ch = 0; ch < 3; ++ch) {
        const Plane p = channel_planes(ia, ib, ch);
        std::vector<double> aa(p.a.size()), bb(p.a.size()), ab(p.a.size());
        for (std::size_t i = 0; i < p.a.size(); ++i) {
            aa[i] = p.a[i] * p.a[i];
            bb[i] = p.b[i] * p.b[i];
            ab[i] = p.a[i] * p.b[i];
        }
        const auto mu_a = blur(p.a, w, h), mu_b = blur(p.b, w, h);
        const auto m_aa = blur(aa, w, h), m_bb = blur(bb, w, h), m_ab = blur(ab, w, h);

        // per-window partials, zero outside the valid region
        std::vector<double> d_mu(p.a.size(), 0.0), d_var(p.a.size(), 0.0),
            d_cov(p.a.size(), 0.0);
        for (int y = kHalf; y < h - kHalf; ++y) {
            for (int x = kHalf; x < w - kHalf; ++x) {
                const std::size_t i = std::size_t(y) * w + x;
                const double va = m_aa[i] - mu_a[i] * mu_a[i];
                const double vb = m_bb[i] - mu_b[i] * mu_b[i];
                const double cov = m_ab[i] - mu_a[i] * mu_b[i];
                const double a1 = 2 * mu_a[i] * mu_b[i] + c1;
                const double a2 = 2 * cov + c2;
                const double b1 = mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1;
                const double b2 = va + vb + c2;
                const double s = (a1 * a2) / (b1 * b2);
                d_mu[i] = 2 * mu_b[i] * a2 / (b1 * b2) - s * 2 * mu_a[i] / b1;
                d_var[i] = -s / b2;
                d_cov[i] = 2 * a1 / (b1 * b2);
            }
        }

        // grad(p) = W*[d_mu] + 2a*W*[d_var] - 2 W*[mu_a d_var]
        //           + b*W*[d_cov] - W*[mu_b d_cov]
        std::vector<double> mu_dvar(p.a.size()), mub_dcov(p.a.size());
        for (std::size_t i = 0; i < p.a.size(); ++i) {
            mu_dvar[i] = mu_a[i] * d_var[i];
            mub_dcov[i] = mu_b[i] * d_cov[i];
        }
        const auto g_mu = blur(d_mu, w, h);
        const auto g_var = blur(d_var, w, h);
        const auto g_mu_dvar = blur(mu_dvar, w, h);
        const auto g_cov = blur(d_cov, w, h);
        const auto g_mub_dcov = blur(mub_dcov, w, h);
        for (std::size_t i = 0; i < p.a.size(); ++i) {
            grad[i][ch] = norm * (g_mu[i] + 2.0 * p.a[i] * g_var[i] - 2.0 * g_mu_dvar[i] +
                                  p.b[i] * g_cov[i] - g_mub_dcov[i]);
        }
    }
    return grad;
}

} // namespace holosplat

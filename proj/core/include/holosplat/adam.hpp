#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace holosplat {

/// Flat-array Adam with per-call learning rate. One instance per parameter
/// group; the trainer owns one per GaussianSet array.
class Adam {
public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-15)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    /// params and grads must have the same length as the tracked state
    /// (state grows on first use). Throws on NaN gradients.
    void step(std::span<double> params, std::span<const double> grads, double lr);

    std::size_t size() const { return m_.size(); }
    void reset() { m_.clear(); v_.clear(); t_ = 0; }

    /// Rearranges optimizer state when Gaussians are cloned/split/pruned:
    /// new row i takes the state of old row source[i], or zeros when
    /// source[i] == npos. values_per_row is the flattened row width.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    void remap_rows(const std::vector<std::size_t>& source, std::size_t values_per_row);

    /// Zeroes the moments for every element (used after opacity resets).
    void zero_moments();

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

} // namespace holosplat

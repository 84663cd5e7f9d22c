#include "holosplat/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace holosplat {

void Adam::step(std::span<double> params, std::span<const double> grads, double lr) {
    if (params.size() != grads.size())
        throw std::invalid_argument("Adam::step: param/grad size mismatch");
    if (m_.empty()) {
        m_.assign(params.size(), 0.0);
        v_.assign(params.size(), 0.0);
    } else if (m_.size() != params.size()) {
        throw std::invalid_argument("Adam::step: state size mismatch (remap_rows first)");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        if (std::isnan(g)) throw std::runtime_error("Adam::step: NaN gradient");
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
        const double m_hat = m_[i] / bc1;
        const double v_hat = v_[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
}

void Adam::remap_rows(const std::vector<std::size_t>& source, std::size_t values_per_row) {
    if (m_.empty()) return;
    std::vector<double> m_new(source.size() * values_per_row, 0.0);
    std::vector<double> v_new(source.size() * values_per_row, 0.0);
    for (std::size_t row = 0; row < source.size(); ++row) {
        if (source[row] == npos) continue;
        for (std::size_t j = 0; j < values_per_row; ++j) {
            m_new[row * values_per_row + j] = m_[source[row] * values_per_row + j];
            v_new[row * values_per_row + j] = v_[source[row] * values_per_row + j];
        }
    }
    m_ = std::move(m_new);
    v_ = std::move(v_new);
}

void Adam::zero_moments() {
    std::fill(m_.begin(), m_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), 0.0);
}

} // namespace holosplat

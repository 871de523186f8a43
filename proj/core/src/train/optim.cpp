#include "scs/train/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace scs::train {

void Adam::step(std::vector<nn::NamedTensor>& params, double lr) {
    if (!(lr > 0.0)) throw DomainError("learning rate must be > 0");
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.tensor.numel(), 0.0);
            v_.emplace_back(p.tensor.numel(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw ShapeError("Adam: parameter list changed between steps");
    ++steps_;
    const double t = static_cast<double>(steps_);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = params[k].tensor;
        if (!p.requires_grad()) continue;
        auto w = p.mutable_data();
        auto g = p.grad();
        auto& m = m_[k];
        auto& v = v_[k];
        if (m.size() != w.size()) throw ShapeError("Adam: moment shape mismatch for " + params[k].name);
        for (std::size_t i = 0; i < w.size(); ++i) {
            double gi = g.empty() ? 0.0 : g[i];
            gi += cfg_.weight_decay * w[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            w[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

double OneCycleSchedule::lr(double step) const {
    if (total_steps == 0) throw DomainError("one-cycle schedule needs total_steps >= 1");
    const double total = static_cast<double>(total_steps);
    const double t = std::clamp(step, 0.0, total);
    const double peak = peak_step();
    auto cosine = [](double from, double to, double frac) {
        return to + (from - to) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
    };
    if (t <= peak) {
        if (peak <= 0.0) return max_lr;
        return cosine(initial_lr(), max_lr, t / peak);
    }
    const double tail = total - peak;
    return cosine(max_lr, final_lr(), (t - peak) / tail);
}

}  // namespace scs::train

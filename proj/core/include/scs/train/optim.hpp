#pragma once

#include <cstddef>
#include <vector>

#include "scs/nn/modules.hpp"

namespace scs::train {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// Bias-corrected Adam. Moment buffers are allocated lazily and mirror the
/// parameter shapes.
class Adam {
  public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    /// One update of every parameter that holds a gradient. Parameters
    /// without a gradient are treated as having a zero gradient.
    void step(std::vector<nn::NamedTensor>& params, double lr);

    std::size_t step_count() const { return steps_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }
    const AdamConfig& config() const { return cfg_; }

  private:
    AdamConfig cfg_;
    std::size_t steps_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

/// Two-phase cosine one-cycle schedule over [0, total_steps]: rises from
/// max_lr/div_factor to max_lr at pct_start*total_steps, then anneals to
/// max_lr/final_div_factor at total_steps.
struct OneCycleSchedule {
    double max_lr = 0.01;
    std::size_t total_steps = 1;
    double pct_start = 0.3;
    double div_factor = 25.0;
    double final_div_factor = 1e4;

    double initial_lr() const { return max_lr / div_factor; }
    double final_lr() const { return max_lr / final_div_factor; }
    double peak_step() const { return pct_start * static_cast<double>(total_steps); }
    double lr(double step) const;
};

inline double onecycle_lr(double step, const OneCycleSchedule& s) { return s.lr(step); }

}  // namespace scs::train

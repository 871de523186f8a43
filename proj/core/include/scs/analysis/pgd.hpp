#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "scs/data/dataset.hpp"
#include "scs/zoo/model_zoo.hpp"

namespace scs::analysis {

/// Maps an NCHW batch to (N, K) logits with gradient tracking.
using Classifier = std::function<Tensor(const Tensor&)>;

/// 8 log-spaced L-inf budgets from 0.001 to 0.030.
std::vector<double> default_epsilons();

struct AttackConfig {
    std::vector<double> epsilons = default_epsilons();
    std::size_t steps = 10;
    /// step_size = epsilon * step_scale / steps
    double step_scale = 2.5;
    bool random_start = false;
    std::uint64_t seed = 0;

    double step_size(double epsilon) const;
    void validate() const;
};

/// L-inf projected gradient ascent on the cross-entropy loss:
///   x <- clip01( clip_{x0 +- eps}( x + step * sign(grad_x CE) ) )
/// for cfg.steps iterations. Throws NumericError on a non-finite gradient.
Tensor pgd_attack(const Classifier& classify, const Tensor& x0, std::span<const int> labels,
                  const AttackConfig& cfg, double epsilon);

/// Same, against a model in eval mode with its parameters frozen. Names the
/// first layer producing a non-finite activation if the gradient blows up.
Tensor pgd_attack(zoo::Model& model, const Tensor& x0, std::span<const int> labels,
                  const AttackConfig& cfg, double epsilon);

struct SweepPoint {
    double epsilon = 0.0;
    double accuracy = 0.0;
    std::size_t n_eval = 0;
};

/// Accuracy under attack for every epsilon in cfg, over all of `eval_set` in
/// index order.
std::vector<SweepPoint> robustness_sweep(zoo::Model& model, const data::Dataset& eval_set,
                                         const AttackConfig& cfg, std::size_t batch_size = 100);

/// CSV with header `epsilon,accuracy,n_eval`.
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepPoint> points);

}  // namespace scs::analysis

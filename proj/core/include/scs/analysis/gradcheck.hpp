#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scs/tensor.hpp"

namespace scs::analysis {

using MultiFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradcheckResult {
    /// Max relative error per input, in input order.
    std::vector<double> per_input;
    double max_error() const;
};

/// Compares reverse-mode gradients of L = sum(f(inputs) * R), R a seeded
/// uniform(-1,1) projection, against central differences with step h.
/// Relative error is |a - n| / max(|a|, |n|, 1e-3). Inputs are made leaves
/// requiring grad; their values are restored afterwards.
GradcheckResult gradcheck(const MultiFn& f, std::vector<Tensor> inputs, std::uint64_t seed,
                          double h = 1e-5);

struct GradcheckReport {
    std::string layer;
    std::vector<std::string> inputs;
    std::vector<double> max_error;  // per input, max over instances
    std::size_t instances = 0;
    double threshold = 0.0;

    double worst() const;
    bool passed() const { return worst() < threshold; }
};

inline constexpr double kGradcheckThreshold = 1e-4;

/// Layers covered by the suite.
std::vector<std::string> gradcheck_layers();

/// Randomized audit of one layer over `instances` draws. Samples keep every
/// non-smooth point (relu kink, pooling ties, sign flips of signed powers)
/// at least 1e-3 away.
GradcheckReport gradcheck_layer(const std::string& layer, std::size_t instances = 20,
                                std::uint64_t seed = 0, double threshold = kGradcheckThreshold);

/// Runs gradcheck_layer for every name in `layers` (all when empty).
std::vector<GradcheckReport> gradcheck_suite(const std::vector<std::string>& layers = {},
                                             std::size_t instances = 20, std::uint64_t seed = 0,
                                             double threshold = kGradcheckThreshold);

}  // namespace scs::analysis

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scs/tensor.hpp"

namespace scs {

/// Gradient function of one graph node. Receives dLoss/dOutput and is
/// responsible for accumulating into whichever inputs need a gradient.
using BackwardFn = std::function<void(std::span<const double> grad_out)>;

struct Node {
    std::string op;
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    BackwardFn backward;
};

bool grad_enabled();

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool previous_;
};

/// Runs reverse-mode accumulation from a scalar root. Leaves that require a
/// gradient end up holding dRoot/dLeaf (added to any gradient already there).
/// The traversed graph is released afterwards.
void backward(const Tensor& root);

namespace detail {

bool needs_grad(const std::shared_ptr<TensorImpl>& t);

/// Adds `g` into t.grad, allocating it on first use. No-op when t does not
/// need a gradient.
void accumulate(const std::shared_ptr<TensorImpl>& t, std::span<const double> g);

/// Wraps freshly computed values as an op result and, when grad mode is on and
/// some input needs a gradient, attaches a graph node.
Tensor make_result(Shape shape, std::vector<double> data, std::string op,
                   std::vector<Tensor> inputs, BackwardFn fn);

}  // namespace detail
}  // namespace scs

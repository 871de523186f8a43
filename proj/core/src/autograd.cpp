#include "scs/autograd.hpp"

#include <algorithm>
#include <unordered_set>
#include <utility>

namespace scs {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace detail {

bool needs_grad(const std::shared_ptr<TensorImpl>& t) { return t && t->requires_grad; }

void accumulate(const std::shared_ptr<TensorImpl>& t, std::span<const double> g) {
    if (!needs_grad(t)) return;
    if (g.size() != t->data.size()) {
        throw ShapeError("gradient size mismatch during accumulation");
    }
    if (t->grad.empty()) {
        t->grad.assign(g.begin(), g.end());
        return;
    }
    for (std::size_t i = 0; i < g.size(); ++i) t->grad[i] += g[i];
}

Tensor make_result(Shape shape, std::vector<double> data, std::string op,
                   std::vector<Tensor> inputs, BackwardFn fn) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    if (grad_enabled()) {
        bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.defined() && t.requires_grad(); });
        if (any) {
            auto node = std::make_shared<Node>();
            node->op = std::move(op);
            for (auto& in : inputs) {
                if (in.defined()) node->inputs.push_back(in.impl());
            }
            node->backward = std::move(fn);
            impl->requires_grad = true;
            impl->grad_fn = std::move(node);
        }
    }
    return Tensor(std::move(impl));
}

}  // namespace detail

void backward(const Tensor& root) {
    if (!root.defined()) throw UsageError("backward on undefined tensor");
    if (root.numel() != 1) {
        throw UsageError("backward requires a scalar root, got shape " + shape_str(root.shape()));
    }
    if (!root.requires_grad()) return;

    // Iterative post-order DFS; reversing it gives a topological order in
    // which every node precedes its inputs. `order` owns the impls so nodes
    // can be released mid-walk.
    std::vector<std::shared_ptr<TensorImpl>> order;
    std::unordered_set<const TensorImpl*> visited;
    std::vector<std::pair<std::shared_ptr<TensorImpl>, std::size_t>> stack;
    stack.emplace_back(root.impl(), 0);
    visited.insert(root.impl().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (node->grad_fn && next < node->grad_fn->inputs.size()) {
            std::shared_ptr<TensorImpl> child = node->grad_fn->inputs[next++];
            if (child->requires_grad && visited.insert(child.get()).second) {
                stack.emplace_back(std::move(child), 0);
            }
            continue;
        }
        order.push_back(std::move(node));
        stack.pop_back();
    }

    TensorImpl* r = root.impl().get();
    if (r->grad.empty()) {
        r->grad.assign(1, 1.0);
    } else {
        r->grad[0] += 1.0;
    }

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl* t = it->get();
        if (!t->grad_fn) continue;
        if (!t->grad.empty()) t->grad_fn->backward(t->grad);
        // Interior gradients and saved activations are not needed once the
        // node has propagated.
        t->grad.clear();
        t->grad.shrink_to_fit();
        t->grad_fn.reset();
    }
}

}  // namespace scs

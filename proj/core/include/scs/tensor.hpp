#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scs/errors.hpp"

namespace scs {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node;

/// Storage behind a Tensor handle. Values are immutable once the tensor has
/// been used in a graph; only `grad` is written during backward.
struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty == no gradient yet
    bool requires_grad = false;
    std::shared_ptr<Node> grad_fn;
};

/// Dense row-major float64 tensor with a reverse-mode gradient slot.
///
/// Copies are shallow: two handles refer to the same storage, the same way a
/// parameter and the model holding it must share one gradient buffer.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

    static Tensor zeros(Shape shape);
    static Tensor ones(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);
    static Tensor from_vector(Shape shape, std::vector<double> values);

    bool defined() const { return impl_ != nullptr; }
    explicit operator bool() const { return defined(); }

    const Shape& shape() const;
    std::size_t ndim() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<const double> data() const;
    /// Direct write access. Only for leaves (parameters, freshly built inputs).
    std::span<double> mutable_data();
    double item() const;
    double at(std::initializer_list<std::size_t> index) const;
    std::vector<double> to_vector() const;

    bool requires_grad() const;
    Tensor& set_requires_grad(bool on);
    bool is_leaf() const;

    bool has_grad() const;
    std::span<const double> grad() const;
    /// Allocates a zero gradient on first use.
    std::span<double> mutable_grad();
    void zero_grad();

    /// Fresh leaf holding a copy of the values, disconnected from any graph.
    Tensor detach() const;

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

  private:
    const TensorImpl& checked() const;
    TensorImpl& checked();

    std::shared_ptr<TensorImpl> impl_;
};

bool all_finite(std::span<const double> values);

/// Throws NumericError naming `what` if any element is NaN or Inf.
void assert_finite(const Tensor& t, std::string_view what);

}  // namespace scs

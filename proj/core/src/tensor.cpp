#include "scs/tensor.hpp"

#include <cmath>
#include <sstream>

#include "scs/autograd.hpp"

namespace scs {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::ones(Shape shape) { return full(std::move(shape), 1.0); }

Tensor Tensor::full(Shape shape, double value) {
    auto impl = std::make_shared<TensorImpl>();
    impl->data.assign(shape_numel(shape), value);
    impl->shape = std::move(shape);
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value) { return full({}, value); }

Tensor Tensor::from_vector(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("from_vector: shape " + shape_str(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    return Tensor(std::move(impl));
}

const TensorImpl& Tensor::checked() const {
    if (!impl_) throw UsageError("use of undefined tensor");
    return *impl_;
}

TensorImpl& Tensor::checked() {
    if (!impl_) throw UsageError("use of undefined tensor");
    return *impl_;
}

const Shape& Tensor::shape() const { return checked().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const Shape& s = shape();
    if (axis >= s.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(s));
    }
    return s[axis];
}

std::size_t Tensor::numel() const { return checked().data.size(); }

std::span<const double> Tensor::data() const { return checked().data; }

std::span<double> Tensor::mutable_data() { return checked().data; }

double Tensor::item() const {
    const auto& d = checked().data;
    if (d.size() != 1) {
        throw UsageError("item() on tensor of shape " + shape_str(shape()));
    }
    return d[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    const auto& s = shape();
    if (index.size() != s.size()) throw ShapeError("at(): rank mismatch");
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
        if (i >= s[axis]) throw ShapeError("at(): index out of range");
        flat = flat * s[axis] + i;
        ++axis;
    }
    return checked().data[flat];
}

std::vector<double> Tensor::to_vector() const { return checked().data; }

bool Tensor::requires_grad() const { return checked().requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
    TensorImpl& impl = checked();
    if (impl.grad_fn && !on) throw UsageError("cannot clear requires_grad on a non-leaf");
    impl.requires_grad = on;
    return *this;
}

bool Tensor::is_leaf() const { return checked().grad_fn == nullptr; }

bool Tensor::has_grad() const { return !checked().grad.empty(); }

std::span<const double> Tensor::grad() const { return checked().grad; }

std::span<double> Tensor::mutable_grad() {
    TensorImpl& t = checked();
    if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
    return t.grad;
}

void Tensor::zero_grad() { checked().grad.clear(); }

Tensor Tensor::detach() const {
    const TensorImpl& src = checked();
    return from_vector(src.shape, src.data);
}

bool all_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void assert_finite(const Tensor& t, std::string_view what) {
    auto d = t.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!std::isfinite(d[i])) {
            std::ostringstream os;
            os << "non-finite value " << d[i] << " in " << what << " at flat index " << i
               << " of shape " << shape_str(t.shape());
            throw NumericError(os.str());
        }
    }
}

}  // namespace scs

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "scs/tensor.hpp"

namespace scs {

// Binary elementwise ops follow numpy broadcasting (trailing dims aligned,
// size-1 dims stretched). Gradients flowing into a broadcast operand are
// summed over the stretched dims.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& x);
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);

Tensor relu(const Tensor& x);  // subgradient 0 at 0
Tensor sqrt(const Tensor& x);
Tensor abs(const Tensor& x);   // subgradient 0 at 0
Tensor sign(const Tensor& x);  // zero gradient everywhere
Tensor log(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor softplus(const Tensor& x);
/// max(x, floor); gradient passes only where x > floor.
Tensor clamp_min(const Tensor& x, double floor);
/// min(max(x, lo), hi); gradient passes where lo <= x <= hi.
Tensor clamp(const Tensor& x, double lo, double hi);

/// Sign-preserving power sign(u)*|u|^p. `p` broadcasts against `u` and must be
/// strictly positive. Backward clamps |u| at 1e-12 so p*|u|^(p-1) and ln|u|
/// stay finite; the forward value is exact.
Tensor signed_pow(const Tensor& u, const Tensor& p);
Tensor signed_pow(const Tensor& u, double p);

inline constexpr double kSignedPowBackwardFloor = 1e-12;

Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::size_t axis, bool keepdim = false);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::size_t axis, bool keepdim = false);

/// Euclidean norm along `axis`; gradient x/||x|| with 0 for an all-zero slice.
Tensor l2_norm(const Tensor& x, std::size_t axis, bool keepdim = false);

struct MaxResult {
    Tensor values;
    std::vector<std::size_t> indices;  // position along the reduced axis
};

/// Max along `axis`, first occurrence on ties; gradient goes to the argmax.
MaxResult max_with_index(const Tensor& x, std::size_t axis);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);  // 2-D only
Tensor permute(const Tensor& x, const std::vector<std::size_t>& dims);
Tensor reshape(const Tensor& x, Shape shape);

/// Zero padding of the two trailing (spatial) dims of an NCHW tensor.
Tensor pad2d(const Tensor& x, std::size_t pad_h, std::size_t pad_w);
/// Half-open range [start, stop) along `axis`.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t stop);

/// Unfolds sliding windows of an NCHW input into a (C*kh*kw, N*Ho*Wo)
/// matrix. Row r = (c*kh + i)*kw + j, column = (n*Ho + oy)*Wo + ox. Padding
/// is zero-filled. Backward folds (col2im) with accumulation.
Tensor im2col(const Tensor& x, std::size_t kh, std::size_t kw, std::size_t stride,
              std::size_t padding);

std::size_t conv_out_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t padding);

/// Mean cross-entropy of (N, K) logits against integer labels.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Numpy-style broadcast of two shapes; throws ShapeError when incompatible.
Shape broadcast_shapes(const Shape& a, const Shape& b);

}  // namespace scs

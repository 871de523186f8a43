#pragma once

#include <random>
#include <vector>

#include "scs/nn/functional.hpp"
#include "scs/tensor.hpp"

namespace scs::testing {

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = u(rng);
    return Tensor::from_vector(shape, std::move(v));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Quadruple-loop direct correlation with zero padding.
inline std::vector<double> naive_conv(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t stride,
                                      std::size_t pad) {
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::size_t o = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
    std::vector<double> out(n * o * oh * ow, 0.0);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oc = 0; oc < o; ++oc)
            for (std::size_t i = 0; i < oh; ++i)
                for (std::size_t j = 0; j < ow; ++j) {
                    double s = bias ? bias->data()[oc] : 0.0;
                    for (std::size_t ic = 0; ic < c; ++ic)
                        for (std::size_t di = 0; di < kh; ++di)
                            for (std::size_t dj = 0; dj < kw; ++dj) {
                                const long yy = static_cast<long>(i * stride + di) - static_cast<long>(pad);
                                const long xx = static_cast<long>(j * stride + dj) - static_cast<long>(pad);
                                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(wd))
                                    continue;
                                s += x.at({b, ic, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)}) *
                                     w.at({oc, ic, di, dj});
                            }
                    out[((b * o + oc) * oh + i) * ow + j] = s;
                }
    return out;
}

inline nn::ConvLikeParams fixed_params(Tensor w, double p, std::optional<double> q, std::size_t stride = 1,
                                       std::size_t pad = 0) {
    nn::ConvLikeParams prm;
    prm.weight = std::move(w);
    prm.p_mode = nn::PMode::fixed(p);
    prm.q_fixed = q;
    prm.stride = stride;
    prm.padding = pad;
    return prm;
}

}  // namespace scs::testing

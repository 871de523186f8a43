#include "scs/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "scs/autograd.hpp"

namespace scs {

using detail::accumulate;
using detail::make_result;
using detail::needs_grad;

namespace {

// ---------------------------------------------------------------------------
// Broadcasting
// ---------------------------------------------------------------------------

struct BroadcastPlan {
    Shape out;
    std::vector<std::size_t> stride_a;  // 0 along broadcast dims
    std::vector<std::size_t> stride_b;
    bool trivial = false;               // identical shapes, flat indexing
};

std::vector<std::size_t> aligned_strides(const Shape& s, const Shape& out) {
    const std::size_t rank = out.size();
    std::vector<std::size_t> strides(rank, 0);
    std::size_t stride = 1;
    for (std::size_t k = 0; k < s.size(); ++k) {
        std::size_t src = s.size() - 1 - k;
        std::size_t dst = rank - 1 - k;
        strides[dst] = (s[src] == 1 && out[dst] != 1) ? 0 : stride;
        stride *= s[src];
    }
    return strides;
}

BroadcastPlan make_plan(const Shape& a, const Shape& b) {
    BroadcastPlan p;
    p.out = broadcast_shapes(a, b);
    p.trivial = (a == b);
    p.stride_a = aligned_strides(a, p.out);
    p.stride_b = aligned_strides(b, p.out);
    return p;
}

// Calls f(out_index, a_index, b_index) for every output element in row-major
// order.
template <class F>
void for_each_broadcast(const BroadcastPlan& p, F&& f) {
    const std::size_t n = shape_numel(p.out);
    if (p.trivial) {
        for (std::size_t i = 0; i < n; ++i) f(i, i, i);
        return;
    }
    const std::size_t rank = p.out.size();
    if (rank == 0) {
        f(0, 0, 0);
        return;
    }
    const std::size_t inner = p.out[rank - 1];
    const std::size_t sa = p.stride_a[rank - 1];
    const std::size_t sb = p.stride_b[rank - 1];
    std::vector<std::size_t> idx(rank, 0);
    std::size_t base_a = 0, base_b = 0;
    for (std::size_t o = 0; o < n; o += inner) {
        for (std::size_t k = 0; k < inner; ++k) f(o + k, base_a + k * sa, base_b + k * sb);
        // advance the outer multi-index
        for (std::size_t d = rank - 1; d-- > 0;) {
            ++idx[d];
            base_a += p.stride_a[d];
            base_b += p.stride_b[d];
            if (idx[d] < p.out[d]) break;
            base_a -= p.stride_a[d] * idx[d];
            base_b -= p.stride_b[d] * idx[d];
            idx[d] = 0;
        }
    }
}

template <class Fwd, class DA, class DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, DA da, DB db) {
    BroadcastPlan plan = make_plan(a.shape(), b.shape());
    std::vector<double> out(shape_numel(plan.out));
    auto ad = a.data();
    auto bd = b.data();
    for_each_broadcast(plan, [&](std::size_t o, std::size_t ia, std::size_t ib) {
        out[o] = fwd(ad[ia], bd[ib]);
    });
    Shape shape = plan.out;
    return make_result(std::move(shape), std::move(out), name, {a, b},
                       [a, b, plan, da, db](std::span<const double> g) {
                           auto ad = a.data();
                           auto bd = b.data();
                           const bool want_a = needs_grad(a.impl());
                           const bool want_b = needs_grad(b.impl());
                           std::vector<double> ga(want_a ? ad.size() : 0, 0.0);
                           std::vector<double> gb(want_b ? bd.size() : 0, 0.0);
                           for_each_broadcast(plan, [&](std::size_t o, std::size_t ia,
                                                        std::size_t ib) {
                               if (want_a) ga[ia] += g[o] * da(ad[ia], bd[ib]);
                               if (want_b) gb[ib] += g[o] * db(ad[ia], bd[ib]);
                           });
                           if (want_a) accumulate(a.impl(), ga);
                           if (want_b) accumulate(b.impl(), gb);
                       });
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& x, const char* name, Fwd fwd, Deriv deriv) {
    auto xd = x.data();
    std::vector<double> out(xd.size());
    for (std::size_t i = 0; i < xd.size(); ++i) out[i] = fwd(xd[i]);
    return make_result(x.shape(), std::move(out), name, {x},
                       [x, deriv](std::span<const double> g) {
                           auto xd = x.data();
                           std::vector<double> gx(xd.size());
                           for (std::size_t i = 0; i < xd.size(); ++i) gx[i] = g[i] * deriv(xd[i]);
                           accumulate(x.impl(), gx);
                       });
}

double sgn(double v) { return (v > 0.0) ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// outer * axis_len * inner decomposition of a shape around `axis`.
struct AxisSplit {
    std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
    if (axis >= s.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(s));
    }
    AxisSplit r;
    for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
    r.len = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
    return r;
}

Shape reduced_shape(const Shape& s, std::size_t axis, bool keepdim) {
    Shape out = s;
    if (keepdim) {
        out[axis] = 1;
    } else {
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
    }
    return out;
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;

// C = op(A) * op(B) + beta * C, row-major. C must have m*n elements.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double* c, double beta) {
    if (m == 0 || n == 0) return;
    const auto M = static_cast<Eigen::Index>(m), N = static_cast<Eigen::Index>(n),
               K = static_cast<Eigen::Index>(k);
    Eigen::Map<RowMat> C(c, M, N);
    if (beta == 0.0) C.setZero();
    else if (beta != 1.0) C *= beta;
    if (k == 0) return;
    ConstMap A(a, trans_a ? K : M, trans_a ? M : K);
    ConstMap B(b, trans_b ? N : K, trans_b ? K : N);
    if (!trans_a && !trans_b) C.noalias() += A * B;
    else if (trans_a && !trans_b) C.noalias() += A.transpose() * B;
    else if (!trans_a && trans_b) C.noalias() += A * B.transpose();
    else C.noalias() += A.transpose() * B.transpose();
}

}  // namespace

Shape broadcast_shapes(const Shape& a, const Shape& b) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank, 1);
    for (std::size_t k = 0; k < rank; ++k) {
        std::size_t da = k < a.size() ? a[a.size() - 1 - k] : 1;
        std::size_t db = k < b.size() ? b[b.size() - 1 - k] : 1;
        if (da != db && da != 1 && db != 1) {
            throw ShapeError("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
        }
        out[rank - 1 - k] = (da == 1) ? db : da;
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "div", [](double x, double y) { return x / y; },
        [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor scale(const Tensor& x, double c) {
    return unary(
        x, "scale", [c](double v) { return c * v; }, [c](double) { return c; });
}

Tensor add_scalar(const Tensor& x, double c) {
    return unary(
        x, "add_scalar", [c](double v) { return v + c; }, [](double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
    return unary(
        x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sqrt(const Tensor& x) {
    return unary(
        x, "sqrt", [](double v) { return std::sqrt(v); },
        [](double v) { return 0.5 / std::sqrt(v); });
}

Tensor abs(const Tensor& x) {
    return unary(
        x, "abs", [](double v) { return std::fabs(v); }, [](double v) { return sgn(v); });
}

Tensor sign(const Tensor& x) {
    return unary(
        x, "sign", [](double v) { return sgn(v); }, [](double) { return 0.0; });
}

Tensor log(const Tensor& x) {
    return unary(
        x, "log", [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Tensor exp(const Tensor& x) {
    return unary(
        x, "exp", [](double v) { return std::exp(v); }, [](double v) { return std::exp(v); });
}

Tensor softplus(const Tensor& x) {
    // log1p(exp(v)) written to avoid overflow for large v.
    return unary(
        x, "softplus",
        [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
        [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor clamp_min(const Tensor& x, double floor) {
    return unary(
        x, "clamp_min", [floor](double v) { return v > floor ? v : floor; },
        [floor](double v) { return v > floor ? 1.0 : 0.0; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    if (lo > hi) throw DomainError("clamp: empty range");
    return unary(
        x, "clamp", [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); },
        [lo, hi](double v) { return v >= lo && v <= hi ? 1.0 : 0.0; });
}

Tensor signed_pow(const Tensor& u, const Tensor& p) {
    for (double pv : p.data()) {
        if (!(pv > 0.0)) {
            throw DomainError("signed_pow: exponent must be > 0, got " + std::to_string(pv));
        }
    }
    BroadcastPlan plan = make_plan(u.shape(), p.shape());
    std::vector<double> out(shape_numel(plan.out));
    auto ud = u.data();
    auto pd = p.data();
    for_each_broadcast(plan, [&](std::size_t o, std::size_t iu, std::size_t ip) {
        const double v = ud[iu];
        const double e = pd[ip];
        out[o] = (e == 1.0) ? v : sgn(v) * std::pow(std::fabs(v), e);
    });
    Shape shape = plan.out;
    return make_result(
        std::move(shape), std::move(out), "signed_pow", {u, p},
        [u, p, plan](std::span<const double> g) {
            auto ud = u.data();
            auto pd = p.data();
            const bool want_u = needs_grad(u.impl());
            const bool want_p = needs_grad(p.impl());
            std::vector<double> gu(want_u ? ud.size() : 0, 0.0);
            std::vector<double> gp(want_p ? pd.size() : 0, 0.0);
            for_each_broadcast(plan, [&](std::size_t o, std::size_t iu, std::size_t ip) {
                const double v = ud[iu];
                const double e = pd[ip];
                const double mag = std::max(std::fabs(v), kSignedPowBackwardFloor);
                if (want_u) gu[iu] += g[o] * e * std::pow(mag, e - 1.0);
                if (want_p) gp[ip] += g[o] * sgn(v) * std::pow(mag, e) * std::log(mag);
            });
            if (want_u) accumulate(u.impl(), gu);
            if (want_p) accumulate(p.impl(), gp);
        });
}

Tensor signed_pow(const Tensor& u, double p) { return signed_pow(u, Tensor::scalar(p)); }

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

Tensor sum(const Tensor& x) {
    auto xd = x.data();
    double s = 0.0;
    for (double v : xd) s += v;
    return make_result({}, {s}, "sum", {x}, [x](std::span<const double> g) {
        std::vector<double> gx(x.numel(), g[0]);
        accumulate(x.impl(), gx);
    });
}

Tensor sum(const Tensor& x, std::size_t axis, bool keepdim) {
    const AxisSplit sp = split_at(x.shape(), axis);
    auto xd = x.data();
    std::vector<double> out(sp.outer * sp.inner, 0.0);
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t k = 0; k < sp.len; ++k)
            for (std::size_t i = 0; i < sp.inner; ++i)
                out[o * sp.inner + i] += xd[(o * sp.len + k) * sp.inner + i];
    return make_result(reduced_shape(x.shape(), axis, keepdim), std::move(out), "sum_axis", {x},
                       [x, sp](std::span<const double> g) {
                           std::vector<double> gx(x.numel());
                           for (std::size_t o = 0; o < sp.outer; ++o)
                               for (std::size_t k = 0; k < sp.len; ++k)
                                   for (std::size_t i = 0; i < sp.inner; ++i)
                                       gx[(o * sp.len + k) * sp.inner + i] = g[o * sp.inner + i];
                           accumulate(x.impl(), gx);
                       });
}

Tensor mean(const Tensor& x) {
    if (x.numel() == 0) throw ShapeError("mean of empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor mean(const Tensor& x, std::size_t axis, bool keepdim) {
    const std::size_t len = x.dim(axis);
    if (len == 0) throw ShapeError("mean over empty axis");
    return scale(sum(x, axis, keepdim), 1.0 / static_cast<double>(len));
}

Tensor l2_norm(const Tensor& x, std::size_t axis, bool keepdim) {
    const AxisSplit sp = split_at(x.shape(), axis);
    auto xd = x.data();
    std::vector<double> out(sp.outer * sp.inner, 0.0);
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t k = 0; k < sp.len; ++k)
            for (std::size_t i = 0; i < sp.inner; ++i) {
                const double v = xd[(o * sp.len + k) * sp.inner + i];
                out[o * sp.inner + i] += v * v;
            }
    for (double& v : out) v = std::sqrt(v);
    std::vector<double> norms = out;
    return make_result(reduced_shape(x.shape(), axis, keepdim), std::move(out), "l2_norm", {x},
                       [x, sp, norms = std::move(norms)](std::span<const double> g) {
                           auto xd = x.data();
                           std::vector<double> gx(x.numel(), 0.0);
                           for (std::size_t o = 0; o < sp.outer; ++o)
                               for (std::size_t i = 0; i < sp.inner; ++i) {
                                   const double nrm = norms[o * sp.inner + i];
                                   if (nrm == 0.0) continue;
                                   const double s = g[o * sp.inner + i] / nrm;
                                   for (std::size_t k = 0; k < sp.len; ++k) {
                                       const std::size_t j = (o * sp.len + k) * sp.inner + i;
                                       gx[j] = s * xd[j];
                                   }
                               }
                           accumulate(x.impl(), gx);
                       });
}

MaxResult max_with_index(const Tensor& x, std::size_t axis) {
    const AxisSplit sp = split_at(x.shape(), axis);
    if (sp.len == 0) throw ShapeError("max over empty axis");
    auto xd = x.data();
    std::vector<double> out(sp.outer * sp.inner);
    std::vector<std::size_t> idx(sp.outer * sp.inner, 0);
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t i = 0; i < sp.inner; ++i) {
            std::size_t best = 0;
            double bv = xd[o * sp.len * sp.inner + i];
            for (std::size_t k = 1; k < sp.len; ++k) {
                const double v = xd[(o * sp.len + k) * sp.inner + i];
                if (v > bv) {
                    bv = v;
                    best = k;
                }
            }
            out[o * sp.inner + i] = bv;
            idx[o * sp.inner + i] = best;
        }
    MaxResult r;
    r.indices = idx;
    r.values = make_result(reduced_shape(x.shape(), axis, false), std::move(out), "max", {x},
                           [x, sp, idx = std::move(idx)](std::span<const double> g) {
                               std::vector<double> gx(x.numel(), 0.0);
                               for (std::size_t o = 0; o < sp.outer; ++o)
                                   for (std::size_t i = 0; i < sp.inner; ++i) {
                                       const std::size_t k = idx[o * sp.inner + i];
                                       gx[(o * sp.len + k) * sp.inner + i] += g[o * sp.inner + i];
                                   }
                               accumulate(x.impl(), gx);
                           });
    return r;
}

// ---------------------------------------------------------------------------
// Linear algebra and layout
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> out(m * n);
    gemm(false, false, m, n, k, a.data().data(), b.data().data(), out.data(), 0.0);
    return make_result({m, n}, std::move(out), "matmul", {a, b},
                       [a, b, m, k, n](std::span<const double> g) {
                           if (needs_grad(a.impl())) {
                               std::vector<double> ga(m * k);
                               gemm(false, true, m, k, n, g.data(), b.data().data(), ga.data(), 0.0);
                               accumulate(a.impl(), ga);
                           }
                           if (needs_grad(b.impl())) {
                               std::vector<double> gb(k * n);
                               gemm(true, false, k, n, m, a.data().data(), g.data(), gb.data(), 0.0);
                               accumulate(b.impl(), gb);
                           }
                       });
}

Tensor transpose(const Tensor& x) {
    if (x.ndim() != 2) throw ShapeError("transpose expects a 2-D tensor");
    return permute(x, {1, 0});
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& dims) {
    const Shape& in = x.shape();
    const std::size_t rank = in.size();
    if (dims.size() != rank) throw ShapeError("permute: rank mismatch");
    std::vector<bool> seen(rank, false);
    for (std::size_t d : dims) {
        if (d >= rank || seen[d]) throw ShapeError("permute: invalid permutation");
        seen[d] = true;
    }
    std::vector<std::size_t> in_strides(rank, 1);
    for (std::size_t d = rank; d-- > 1;) in_strides[d - 1] = in_strides[d] * in[d];
    Shape out_shape(rank);
    std::vector<std::size_t> src_strides(rank);
    for (std::size_t d = 0; d < rank; ++d) {
        out_shape[d] = in[dims[d]];
        src_strides[d] = in_strides[dims[d]];
    }
    // map[o] = source flat index of output element o
    const std::size_t n = x.numel();
    std::vector<std::size_t> map(n);
    {
        std::vector<std::size_t> idx(rank, 0);
        std::size_t src = 0;
        for (std::size_t o = 0; o < n; ++o) {
            map[o] = src;
            for (std::size_t d = rank; d-- > 0;) {
                ++idx[d];
                src += src_strides[d];
                if (idx[d] < out_shape[d]) break;
                src -= src_strides[d] * idx[d];
                idx[d] = 0;
            }
        }
    }
    auto xd = x.data();
    std::vector<double> out(n);
    for (std::size_t o = 0; o < n; ++o) out[o] = xd[map[o]];
    return make_result(std::move(out_shape), std::move(out), "permute", {x},
                       [x, map = std::move(map)](std::span<const double> g) {
                           std::vector<double> gx(x.numel());
                           for (std::size_t o = 0; o < map.size(); ++o) gx[map[o]] = g[o];
                           accumulate(x.impl(), gx);
                       });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
    }
    std::vector<double> out(x.data().begin(), x.data().end());
    return make_result(std::move(shape), std::move(out), "reshape", {x},
                       [x](std::span<const double> g) { accumulate(x.impl(), g); });
}

Tensor pad2d(const Tensor& x, std::size_t pad_h, std::size_t pad_w) {
    if (x.ndim() < 2) throw ShapeError("pad2d expects at least 2 dims");
    const Shape& in = x.shape();
    const std::size_t rank = in.size();
    const std::size_t h = in[rank - 2], w = in[rank - 1];
    const std::size_t planes = x.numel() / std::max<std::size_t>(h * w, 1);
    const std::size_t oh = h + 2 * pad_h, ow = w + 2 * pad_w;
    Shape out_shape = in;
    out_shape[rank - 2] = oh;
    out_shape[rank - 1] = ow;
    auto xd = x.data();
    std::vector<double> out(planes * oh * ow, 0.0);
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t i = 0; i < h; ++i)
            std::copy_n(xd.begin() + static_cast<std::ptrdiff_t>((p * h + i) * w), w,
                        out.begin() + static_cast<std::ptrdiff_t>((p * oh + i + pad_h) * ow + pad_w));
    return make_result(std::move(out_shape), std::move(out), "pad2d", {x},
                       [x, planes, h, w, oh, ow, pad_h, pad_w](std::span<const double> g) {
                           std::vector<double> gx(x.numel());
                           for (std::size_t p = 0; p < planes; ++p)
                               for (std::size_t i = 0; i < h; ++i)
                                   for (std::size_t j = 0; j < w; ++j)
                                       gx[(p * h + i) * w + j] =
                                           g[(p * oh + i + pad_h) * ow + pad_w + j];
                           accumulate(x.impl(), gx);
                       });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t stop) {
    const AxisSplit sp = split_at(x.shape(), axis);
    if (start > stop || stop > sp.len) {
        throw ShapeError("slice [" + std::to_string(start) + "," + std::to_string(stop) +
                         ") out of range for axis of length " + std::to_string(sp.len));
    }
    const std::size_t len = stop - start;
    Shape out_shape = x.shape();
    out_shape[axis] = len;
    auto xd = x.data();
    std::vector<double> out(sp.outer * len * sp.inner);
    for (std::size_t o = 0; o < sp.outer; ++o)
        std::copy_n(xd.begin() + static_cast<std::ptrdiff_t>((o * sp.len + start) * sp.inner),
                    len * sp.inner,
                    out.begin() + static_cast<std::ptrdiff_t>(o * len * sp.inner));
    return make_result(std::move(out_shape), std::move(out), "slice", {x},
                       [x, sp, start, len](std::span<const double> g) {
                           std::vector<double> gx(x.numel(), 0.0);
                           for (std::size_t o = 0; o < sp.outer; ++o)
                               std::copy_n(g.begin() + static_cast<std::ptrdiff_t>(o * len * sp.inner),
                                           len * sp.inner,
                                           gx.begin() + static_cast<std::ptrdiff_t>(
                                                            (o * sp.len + start) * sp.inner));
                           accumulate(x.impl(), gx);
                       });
}

std::size_t conv_out_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t padding) {
    if (stride == 0) throw ShapeError("stride must be >= 1");
    if (in + 2 * padding < k) {
        throw ShapeError("kernel " + std::to_string(k) + " larger than padded input " +
                         std::to_string(in + 2 * padding));
    }
    return (in + 2 * padding - k) / stride + 1;
}

Tensor im2col(const Tensor& x, std::size_t kh, std::size_t kw, std::size_t stride,
              std::size_t padding) {
    if (x.ndim() != 4) throw ShapeError("im2col expects NCHW, got " + shape_str(x.shape()));
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = conv_out_size(h, kh, stride, padding);
    const std::size_t ow = conv_out_size(w, kw, stride, padding);
    const std::size_t rows = c * kh * kw;
    const std::size_t cols = n * oh * ow;
    auto xd = x.data();
    std::vector<double> out(rows * cols, 0.0);
    const auto ipad = static_cast<std::ptrdiff_t>(padding);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < kh; ++i)
            for (std::size_t j = 0; j < kw; ++j) {
                double* row = out.data() + ((ch * kh + i) * kw + j) * cols;
                for (std::size_t b = 0; b < n; ++b) {
                    const double* plane = xd.data() + (b * c + ch) * h * w;
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        const auto y = static_cast<std::ptrdiff_t>(oy * stride + i) - ipad;
                        double* dst = row + (b * oh + oy) * ow;
                        if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
                        const double* src = plane + static_cast<std::size_t>(y) * w;
                        for (std::size_t ox = 0; ox < ow; ++ox) {
                            const auto xx = static_cast<std::ptrdiff_t>(ox * stride + j) - ipad;
                            if (xx >= 0 && xx < static_cast<std::ptrdiff_t>(w)) {
                                dst[ox] = src[xx];
                            }
                        }
                    }
                }
            }
    return make_result(
        {rows, cols}, std::move(out), "im2col", {x},
        [x, n, c, h, w, kh, kw, oh, ow, stride, ipad, cols](std::span<const double> g) {
            std::vector<double> gx(x.numel(), 0.0);
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t i = 0; i < kh; ++i)
                    for (std::size_t j = 0; j < kw; ++j) {
                        const double* row = g.data() + ((ch * kh + i) * kw + j) * cols;
                        for (std::size_t b = 0; b < n; ++b) {
                            double* plane = gx.data() + (b * c + ch) * h * w;
                            for (std::size_t oy = 0; oy < oh; ++oy) {
                                const auto y = static_cast<std::ptrdiff_t>(oy * stride + i) - ipad;
                                if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
                                const double* src = row + (b * oh + oy) * ow;
                                double* dst = plane + static_cast<std::size_t>(y) * w;
                                for (std::size_t ox = 0; ox < ow; ++ox) {
                                    const auto xx =
                                        static_cast<std::ptrdiff_t>(ox * stride + j) - ipad;
                                    if (xx >= 0 && xx < static_cast<std::ptrdiff_t>(w)) {
                                        dst[xx] += src[ox];
                                    }
                                }
                            }
                        }
                    }
            accumulate(x.impl(), gx);
        });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
    if (logits.ndim() != 2 || logits.dim(0) != labels.size()) {
        throw ShapeError("cross_entropy: logits " + shape_str(logits.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
    }
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    if (n == 0) throw ShapeError("cross_entropy on empty batch");
    auto ld = logits.data();
    std::vector<double> probs(n * k);
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const int y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= k) {
            throw ShapeError("cross_entropy: label " + std::to_string(y) + " out of range");
        }
        const double* row = ld.data() + r * k;
        const double m = *std::max_element(row, row + k);
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - m);
        const double log_z = m + std::log(z);
        for (std::size_t j = 0; j < k; ++j) probs[r * k + j] = std::exp(row[j] - log_z);
        loss += log_z - row[y];
    }
    loss /= static_cast<double>(n);
    std::vector<int> ys(labels.begin(), labels.end());
    return make_result({}, {loss}, "cross_entropy", {logits},
                       [logits, probs = std::move(probs), ys = std::move(ys), n,
                        k](std::span<const double> g) {
                           std::vector<double> gl(probs);
                           for (std::size_t r = 0; r < n; ++r)
                               gl[r * k + static_cast<std::size_t>(ys[r])] -= 1.0;
                           const double s = g[0] / static_cast<double>(n);
                           for (double& v : gl) v *= s;
                           accumulate(logits.impl(), gl);
                       });
}

}  // namespace scs

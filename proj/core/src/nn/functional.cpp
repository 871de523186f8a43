#include "scs/nn/functional.hpp"

#include <cmath>

#include "scs/autograd.hpp"
#include "scs/ops.hpp"

namespace scs::nn {

using detail::accumulate;
using detail::make_result;
using detail::needs_grad;

std::string to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::conv: return "conv";
        case FeatureKind::cossim: return "cossim";
        case FeatureKind::scs: return "scs";
        case FeatureKind::sdp: return "sdp";
    }
    return "?";
}

FeatureKind parse_feature_kind(const std::string& s) {
    if (s == "conv") return FeatureKind::conv;
    if (s == "cossim") return FeatureKind::cossim;
    if (s == "scs") return FeatureKind::scs;
    if (s == "sdp") return FeatureKind::sdp;
    throw ConfigError("unknown layer kind '" + s + "' (expected conv|cossim|scs|sdp)");
}

std::string to_string(const PMode& mode) {
    if (!mode.is_fixed()) return "learned";
    std::string v = std::to_string(mode.value);
    // trim trailing zeros so "fixed:1" round-trips as written
    while (!v.empty() && v.back() == '0') v.pop_back();
    if (!v.empty() && v.back() == '.') v.pop_back();
    return "fixed:" + v;
}

PMode parse_p_mode(const std::string& s) {
    if (s == "learned") return PMode::learned();
    if (s.rfind("fixed:", 0) == 0) {
        try {
            std::size_t used = 0;
            const std::string num = s.substr(6);
            double v = std::stod(num, &used);
            if (used != num.size() || !(v > 0.0)) throw std::invalid_argument(s);
            return PMode::fixed(v);
        } catch (const std::exception&) {
            throw ConfigError("bad p mode '" + s + "' (fixed value must be a positive number)");
        }
    }
    throw ConfigError("unknown p mode '" + s + "' (expected learned|fixed:<v>)");
}

std::string to_string(PoolKind kind) { return kind == PoolKind::max ? "maxpool" : "maxabspool"; }

PoolKind parse_pool_kind(const std::string& s) {
    if (s == "maxpool") return PoolKind::max;
    if (s == "maxabspool") return PoolKind::maxabs;
    throw ConfigError("unknown pooling '" + s + "' (expected maxpool|maxabspool)");
}

double inverse_softplus(double q) {
    if (!(q > 0.0)) throw DomainError("inverse_softplus needs q > 0");
    return q > 30.0 ? q : std::log(std::expm1(q));
}

Tensor ConvLikeParams::effective_p() const {
    if (p_mode.is_fixed()) return Tensor::full({out_channels()}, p_mode.value);
    if (!p_raw.defined()) throw UsageError("learned p mode without p_raw");
    return scs::exp(p_raw);
}

Tensor ConvLikeParams::effective_q() const {
    if (q_fixed) {
        if (*q_fixed < 0.0) throw DomainError("q must be >= 0");
        return Tensor::scalar(*q_fixed);
    }
    if (!q_raw.defined()) throw UsageError("learned q without q_raw");
    return reshape(softplus(q_raw), {});
}

namespace {

struct Correlation {
    Tensor cols;  // (K, N*P)
    Tensor wmat;  // (O, K)
    Tensor dots;  // (O, N*P)
    std::size_t n = 0, oh = 0, ow = 0;
};

Correlation correlate(const Tensor& x, const ConvLikeParams& params) {
    const Tensor& w = params.weight;
    if (x.ndim() != 4) throw ShapeError("expected NCHW input, got " + shape_str(x.shape()));
    if (w.ndim() != 4) throw ShapeError("expected (O,C,kh,kw) weight, got " + shape_str(w.shape()));
    if (x.dim(1) != w.dim(1)) {
        throw ShapeError("input has " + std::to_string(x.dim(1)) + " channels, weight expects " +
                         std::to_string(w.dim(1)));
    }
    Correlation c;
    c.n = x.dim(0);
    c.oh = conv_out_size(x.dim(2), w.dim(2), params.stride, params.padding);
    c.ow = conv_out_size(x.dim(3), w.dim(3), params.stride, params.padding);
    c.cols = im2col(x, w.dim(2), w.dim(3), params.stride, params.padding);
    c.wmat = reshape(w, {w.dim(0), w.dim(1) * w.dim(2) * w.dim(3)});
    c.dots = matmul(c.wmat, c.cols);
    return c;
}

Tensor to_nchw(const Tensor& y, const Correlation& c) {
    const std::size_t o = y.dim(0);
    return permute(reshape(y, {o, c.n, c.oh, c.ow}), {1, 0, 2, 3});
}

Tensor channel_exponent(const ConvLikeParams& params) {
    return reshape(params.effective_p(), {params.out_channels(), 1});
}

bool p_is_one(const ConvLikeParams& params) {
    return params.p_mode.is_fixed() && params.p_mode.value == 1.0;
}

}  // namespace

Tensor conv2d(const Tensor& x, const ConvLikeParams& params) {
    Correlation c = correlate(x, params);
    Tensor y = c.dots;
    if (params.bias.defined()) {
        if (params.bias.numel() != params.out_channels()) throw ShapeError("conv2d: bias size");
        y = add(y, reshape(params.bias, {params.out_channels(), 1}));
    }
    return to_nchw(y, c);
}

Tensor scs2d(const Tensor& x, const ConvLikeParams& params) {
    Correlation c = correlate(x, params);
    Tensor patch_norm = l2_norm(c.cols, 0, true);                          // (1, N*P)
    Tensor kernel_norm = clamp_min(l2_norm(c.wmat, 1, true), kNormFloor);  // (O, 1)
    Tensor denom = clamp_min(mul(add(patch_norm, params.effective_q()), kernel_norm), kNormFloor);
    // |u| <= 1 by Cauchy-Schwarz; rounding can overshoot by a few ulps when q = 0
    Tensor u = clamp(div(c.dots, denom), -1.0, 1.0);
    Tensor y = p_is_one(params) ? u : signed_pow(u, channel_exponent(params));
    return to_nchw(y, c);
}

Tensor cossim2d(const Tensor& x, const ConvLikeParams& params) {
    ConvLikeParams unsharpened = params;
    unsharpened.p_mode = PMode::fixed(1.0);
    unsharpened.p_raw = Tensor();
    return scs2d(x, unsharpened);
}

Tensor sdp2d(const Tensor& x, const ConvLikeParams& params) {
    Correlation c = correlate(x, params);
    Tensor y = p_is_one(params) ? c.dots : signed_pow(c.dots, channel_exponent(params));
    return to_nchw(y, c);
}

Tensor feature2d(FeatureKind kind, const Tensor& x, const ConvLikeParams& params) {
    switch (kind) {
        case FeatureKind::conv: return conv2d(x, params);
        case FeatureKind::cossim: return cossim2d(x, params);
        case FeatureKind::scs: return scs2d(x, params);
        case FeatureKind::sdp: return sdp2d(x, params);
    }
    throw UsageError("bad feature kind");
}

namespace {

template <class Better>
Tensor window_select(const Tensor& x, std::size_t window, std::size_t stride, const char* name,
                     Better better) {
    if (x.ndim() != 4) throw ShapeError(std::string(name) + ": expected NCHW input");
    if (window == 0) throw ShapeError(std::string(name) + ": window must be >= 1");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = conv_out_size(h, window, stride, 0);
    const std::size_t ow = conv_out_size(w, window, stride, 0);
    auto xd = x.data();
    std::vector<double> out(n * c * oh * ow);
    std::vector<std::size_t> src(out.size());
    for (std::size_t p = 0; p < n * c; ++p) {
        const std::size_t base = p * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                std::size_t best = base + oy * stride * w + ox * stride;
                for (std::size_t i = 0; i < window; ++i)
                    for (std::size_t j = 0; j < window; ++j) {
                        const std::size_t k = base + (oy * stride + i) * w + ox * stride + j;
                        if (better(xd[k], xd[best])) best = k;
                    }
                const std::size_t o = (p * oh + oy) * ow + ox;
                out[o] = xd[best];
                src[o] = best;
            }
    }
    return make_result({n, c, oh, ow}, std::move(out), name, {x},
                       [x, src = std::move(src)](std::span<const double> g) {
                           std::vector<double> gx(x.numel(), 0.0);
                           for (std::size_t o = 0; o < src.size(); ++o) gx[src[o]] += g[o];
                           accumulate(x.impl(), gx);
                       });
}

}  // namespace

Tensor maxpool2d(const Tensor& x, std::size_t window, std::size_t stride) {
    return window_select(x, window, stride, "maxpool2d",
                         [](double cand, double best) { return cand > best; });
}

Tensor maxabspool2d(const Tensor& x, std::size_t window, std::size_t stride) {
    return window_select(x, window, stride, "maxabspool2d", [](double cand, double best) {
        return std::fabs(cand) > std::fabs(best);
    });
}

Tensor pool2d(PoolKind kind, const Tensor& x, std::size_t window, std::size_t stride) {
    return kind == PoolKind::max ? maxpool2d(x, window, stride) : maxabspool2d(x, window, stride);
}

Tensor batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, bool training) {
    if (x.ndim() != 4) throw ShapeError("batchnorm2d: expected NCHW input");
    const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    if (gamma.numel() != c || beta.numel() != c || state.running_mean.size() != c ||
        state.running_var.size() != c) {
        throw ShapeError("batchnorm2d: parameter size does not match " + std::to_string(c) +
                         " channels");
    }
    const std::size_t m = n * hw;
    auto xd = x.data();
    auto gd = gamma.data();
    auto bd = beta.data();
    std::vector<double> mu(c), inv_std(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        if (training) {
            if (m == 0) throw ShapeError("batchnorm2d: empty batch");
            double s = 0.0;
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t k = 0; k < hw; ++k) s += xd[(b * c + ch) * hw + k];
            const double mean = s / static_cast<double>(m);
            double ss = 0.0;
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t k = 0; k < hw; ++k) {
                    const double d = xd[(b * c + ch) * hw + k] - mean;
                    ss += d * d;
                }
            const double var = ss / static_cast<double>(m);
            const double unbiased = m > 1 ? ss / static_cast<double>(m - 1) : var;
            state.running_mean[ch] =
                (1.0 - state.momentum) * state.running_mean[ch] + state.momentum * mean;
            state.running_var[ch] =
                (1.0 - state.momentum) * state.running_var[ch] + state.momentum * unbiased;
            mu[ch] = mean;
            inv_std[ch] = 1.0 / std::sqrt(var + state.eps);
        } else {
            mu[ch] = state.running_mean[ch];
            inv_std[ch] = 1.0 / std::sqrt(state.running_var[ch] + state.eps);
        }
    }
    std::vector<double> xhat(x.numel());
    std::vector<double> out(x.numel());
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t k = 0; k < hw; ++k) {
                const std::size_t i = (b * c + ch) * hw + k;
                xhat[i] = (xd[i] - mu[ch]) * inv_std[ch];
                out[i] = gd[ch] * xhat[i] + bd[ch];
            }
    return make_result(
        x.shape(), std::move(out), "batchnorm2d", {x, gamma, beta},
        [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), n, c, hw,
         training](std::span<const double> g) {
            auto gd = gamma.data();
            std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t ch = 0; ch < c; ++ch)
                    for (std::size_t k = 0; k < hw; ++k) {
                        const std::size_t i = (b * c + ch) * hw + k;
                        sum_g[ch] += g[i];
                        sum_gx[ch] += g[i] * xhat[i];
                    }
            if (needs_grad(gamma.impl())) accumulate(gamma.impl(), sum_gx);
            if (needs_grad(beta.impl())) accumulate(beta.impl(), sum_g);
            if (!needs_grad(x.impl())) return;
            std::vector<double> gx(x.numel());
            const double m = static_cast<double>(n * hw);
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t ch = 0; ch < c; ++ch)
                    for (std::size_t k = 0; k < hw; ++k) {
                        const std::size_t i = (b * c + ch) * hw + k;
                        const double scale = gd[ch] * inv_std[ch];
                        gx[i] = training
                                    ? scale * (g[i] - sum_g[ch] / m - xhat[i] * sum_gx[ch] / m)
                                    : scale * g[i];
                    }
            accumulate(x.impl(), gx);
        });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (x.ndim() != 2 || weight.ndim() != 2 || x.dim(1) != weight.dim(1)) {
        throw ShapeError("linear: input " + shape_str(x.shape()) + " vs weight " +
                         shape_str(weight.shape()));
    }
    Tensor y = matmul(x, transpose(weight));
    return bias.defined() ? add(y, bias) : y;
}

Tensor adaptive_avgpool(const Tensor& x, std::size_t out_h, std::size_t out_w) {
    if (x.ndim() != 4) throw ShapeError("adaptive_avgpool: expected NCHW input");
    if (out_h == 0 || out_w == 0) throw ShapeError("adaptive_avgpool: empty output grid");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    struct Bin {
        std::size_t y0, y1, x0, x1;
    };
    std::vector<Bin> bins;
    for (std::size_t i = 0; i < out_h; ++i)
        for (std::size_t j = 0; j < out_w; ++j)
            bins.push_back({i * h / out_h, ((i + 1) * h + out_h - 1) / out_h, j * w / out_w,
                            ((j + 1) * w + out_w - 1) / out_w});
    auto xd = x.data();
    std::vector<double> out(n * c * out_h * out_w);
    for (std::size_t p = 0; p < n * c; ++p)
        for (std::size_t b = 0; b < bins.size(); ++b) {
            const Bin& bin = bins[b];
            double s = 0.0;
            for (std::size_t y = bin.y0; y < bin.y1; ++y)
                for (std::size_t xx = bin.x0; xx < bin.x1; ++xx) s += xd[(p * h + y) * w + xx];
            out[p * bins.size() + b] = s / static_cast<double>((bin.y1 - bin.y0) * (bin.x1 - bin.x0));
        }
    return make_result({n, c, out_h, out_w}, std::move(out), "adaptive_avgpool", {x},
                       [x, bins, n, c, h, w](std::span<const double> g) {
                           std::vector<double> gx(x.numel(), 0.0);
                           for (std::size_t p = 0; p < n * c; ++p)
                               for (std::size_t b = 0; b < bins.size(); ++b) {
                                   const Bin& bin = bins[b];
                                   const double share =
                                       g[p * bins.size() + b] /
                                       static_cast<double>((bin.y1 - bin.y0) * (bin.x1 - bin.x0));
                                   for (std::size_t y = bin.y0; y < bin.y1; ++y)
                                       for (std::size_t xx = bin.x0; xx < bin.x1; ++xx)
                                           gx[(p * h + y) * w + xx] += share;
                               }
                           accumulate(x.impl(), gx);
                       });
}

Tensor flatten(const Tensor& x) {
    if (x.ndim() < 1) throw ShapeError("flatten of a scalar");
    const std::size_t n = x.dim(0);
    return reshape(x, {n, n == 0 ? 0 : x.numel() / n});
}

Tensor shortcut_subsample_pad(const Tensor& x, std::size_t stride, std::size_t out_channels) {
    if (x.ndim() != 4) throw ShapeError("shortcut: expected NCHW input");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (out_channels < c) throw ShapeError("shortcut cannot drop channels");
    if (stride == 0) throw ShapeError("shortcut stride must be >= 1");
    const std::size_t oh = (h + stride - 1) / stride, ow = (w + stride - 1) / stride;
    const std::size_t offset = (out_channels - c) / 2;
    auto xd = x.data();
    std::vector<double> out(n * out_channels * oh * ow, 0.0);
    std::vector<std::size_t> src;  // for every copied output element, its source
    std::vector<std::size_t> dst;
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t xx = 0; xx < ow; ++xx) {
                    const std::size_t s = ((b * c + ch) * h + y * stride) * w + xx * stride;
                    const std::size_t d = ((b * out_channels + ch + offset) * oh + y) * ow + xx;
                    out[d] = xd[s];
                    src.push_back(s);
                    dst.push_back(d);
                }
    return make_result({n, out_channels, oh, ow}, std::move(out), "shortcut", {x},
                       [x, src = std::move(src), dst = std::move(dst)](std::span<const double> g) {
                           std::vector<double> gx(x.numel(), 0.0);
                           for (std::size_t k = 0; k < src.size(); ++k) gx[src[k]] += g[dst[k]];
                           accumulate(x.impl(), gx);
                       });
}

Tensor normalize_channels(const Tensor& x, const std::vector<double>& mean,
                          const std::vector<double>& stddev) {
    if (x.ndim() != 4 || mean.size() != x.dim(1) || stddev.size() != x.dim(1)) {
        throw ShapeError("normalize_channels: constants do not match channel count");
    }
    const std::size_t c = x.dim(1);
    Tensor m = Tensor::from_vector({1, c, 1, 1}, mean);
    Tensor s = Tensor::from_vector({1, c, 1, 1}, stddev);
    return div(sub(x, m), s);
}

}  // namespace scs::nn

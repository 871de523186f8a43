#include "scs/analysis/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "scs/autograd.hpp"
#include "scs/errors.hpp"
#include "scs/hash.hpp"
#include "scs/nn/functional.hpp"
#include "scs/ops.hpp"

namespace scs::analysis {

double GradcheckResult::max_error() const {
    return per_input.empty() ? 0.0 : *std::max_element(per_input.begin(), per_input.end());
}

double GradcheckReport::worst() const {
    return max_error.empty() ? 0.0 : *std::max_element(max_error.begin(), max_error.end());
}

namespace {

double project(const Tensor& out, const std::vector<double>& r) {
    auto d = out.data();
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += d[i] * r[i];
    return s;
}

}  // namespace

GradcheckResult gradcheck(const MultiFn& f, std::vector<Tensor> inputs, std::uint64_t seed, double h) {
    if (!(h > 0.0)) throw DomainError("gradcheck step must be > 0");
    for (auto& in : inputs) {
        in = in.detach();
        in.set_requires_grad(true);
    }
    Tensor out = f(inputs);
    std::mt19937_64 rng(derive_seed(seed, "gradcheck/projection"));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> r(out.numel());
    for (double& v : r) v = u(rng);
    backward(sum(mul(out, Tensor::from_vector(out.shape(), r))));

    GradcheckResult res;
    NoGradGuard no_grad;
    for (auto& in : inputs) {
        std::vector<double> analytic(in.numel(), 0.0);
        if (in.has_grad()) {
            auto g = in.grad();
            std::copy(g.begin(), g.end(), analytic.begin());
        }
        auto data = in.mutable_data();
        double worst = 0.0;
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double orig = data[j];
            data[j] = orig + h;
            const double fp = project(f(inputs), r);
            data[j] = orig - h;
            const double fm = project(f(inputs), r);
            data[j] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[j];
            const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
            worst = std::max(worst, err);
        }
        res.per_input.push_back(worst);
    }
    return res;
}

namespace {

constexpr double kMargin = 1e-3;
constexpr std::size_t kMaxRejections = 10000;

struct Sampler {
    std::mt19937_64 rng;

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

    Tensor tensor(const Shape& shape, double lo, double hi) {
        std::vector<double> v(shape_numel(shape));
        for (double& x : v) x = uniform(lo, hi);
        return Tensor::from_vector(shape, std::move(v));
    }

    /// Uniform in [-hi, hi] with |x| >= kMargin.
    Tensor away_from_zero(const Shape& shape, double hi) {
        std::vector<double> v(shape_numel(shape));
        for (double& x : v) {
            do x = uniform(-hi, hi);
            while (std::abs(x) < kMargin);
        }
        return Tensor::from_vector(shape, std::move(v));
    }

    /// Distinct values on a grid with spacing 0.01, randomly placed.
    std::vector<double> distinct(std::size_t n) {
        std::vector<double> v(n);
        std::iota(v.begin(), v.end(), 0.0);
        std::shuffle(v.begin(), v.end(), rng);
        for (double& x : v) x = 0.05 + 0.01 * x;
        return v;
    }
};

bool all_away_from_zero(const Tensor& t) {
    return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::abs(v) >= kMargin; });
}

nn::ConvLikeParams conv_params(const std::vector<Tensor>& in, std::size_t stride, std::size_t padding) {
    nn::ConvLikeParams p;
    p.weight = in[1];
    p.stride = stride;
    p.padding = padding;
    return p;
}

struct Instance {
    std::vector<Tensor> inputs;
    MultiFn fn;
};

Instance make_instance(const std::string& layer, Sampler& s) {
    const std::size_t stride = s.rng() % 2 + 1;
    const std::size_t padding = s.rng() % 2;
    const Shape xs{2, 2, 5, 5}, ws{3, 2, 3, 3};

    if (layer == "conv2d") {
        return {{s.tensor(xs, -1, 1), s.tensor(ws, -1, 1), s.tensor({3}, -1, 1)},
                [=](const std::vector<Tensor>& in) {
                    auto p = conv_params(in, stride, padding);
                    p.bias = in[2];
                    return nn::conv2d(in[0], p);
                }};
    }
    if (layer == "scs2d") {
        for (std::size_t tries = 0; tries < kMaxRejections; ++tries) {
            std::vector<Tensor> in{s.tensor(xs, -1, 1), s.tensor(ws, -1, 1), s.tensor({3}, -0.5, 0.7),
                                   s.tensor({}, -3.0, 0.0)};
            auto fn = [=](const std::vector<Tensor>& v) {
                auto p = conv_params(v, stride, padding);
                p.p_raw = v[2];
                p.q_raw = v[3];
                return nn::scs2d(v[0], p);
            };
            NoGradGuard no_grad;
            auto p = conv_params(in, stride, padding);
            p.q_raw = in[3];
            if (all_away_from_zero(nn::cossim2d(in[0], p))) return {in, fn};
        }
        throw NumericError("gradcheck: could not sample a smooth scs2d instance");
    }
    if (layer == "cossim2d") {
        return {{s.tensor(xs, -1, 1), s.tensor(ws, -1, 1), s.tensor({}, -3.0, 0.0)},
                [=](const std::vector<Tensor>& in) {
                    auto p = conv_params(in, stride, padding);
                    p.q_raw = in[2];
                    return nn::cossim2d(in[0], p);
                }};
    }
    if (layer == "sdp2d") {
        for (std::size_t tries = 0; tries < kMaxRejections; ++tries) {
            std::vector<Tensor> in{s.tensor(xs, -1, 1), s.tensor(ws, -1, 1), s.tensor({3}, -0.5, 0.7)};
            auto fn = [=](const std::vector<Tensor>& v) {
                auto p = conv_params(v, stride, padding);
                p.p_raw = v[2];
                return nn::sdp2d(v[0], p);
            };
            NoGradGuard no_grad;
            if (all_away_from_zero(nn::conv2d(in[0], conv_params(in, stride, padding)))) return {in, fn};
        }
        throw NumericError("gradcheck: could not sample a smooth sdp2d instance");
    }
    if (layer == "maxpool2d") {
        const Shape shape{2, 2, 4, 4};
        std::vector<double> v = s.distinct(shape_numel(shape));
        for (double& x : v) x -= 0.3;
        return {{Tensor::from_vector(shape, std::move(v))},
                [](const std::vector<Tensor>& in) { return nn::maxpool2d(in[0], 2, 2); }};
    }
    if (layer == "maxabspool2d") {
        const Shape shape{2, 2, 4, 4};
        std::vector<double> v = s.distinct(shape_numel(shape));
        for (double& x : v) x *= (s.rng() % 2) ? 1.0 : -1.0;
        return {{Tensor::from_vector(shape, std::move(v))},
                [](const std::vector<Tensor>& in) { return nn::maxabspool2d(in[0], 2, 2); }};
    }
    if (layer == "batchnorm2d") {
        return {{s.tensor({4, 2, 3, 3}, -1, 1), s.tensor({2}, 0.5, 1.5), s.tensor({2}, -0.5, 0.5)},
                [](const std::vector<Tensor>& in) {
                    nn::BatchNormState state(2);
                    return nn::batchnorm2d(in[0], in[1], in[2], state, true);
                }};
    }
    if (layer == "linear") {
        return {{s.tensor({3, 4}, -1, 1), s.tensor({5, 4}, -1, 1), s.tensor({5}, -1, 1)},
                [](const std::vector<Tensor>& in) { return nn::linear(in[0], in[1], in[2]); }};
    }
    if (layer == "relu") {
        return {{s.away_from_zero({3, 7}, 1.0)}, [](const std::vector<Tensor>& in) { return relu(in[0]); }};
    }
    if (layer == "signed_pow") {
        return {{s.away_from_zero({3, 4}, 2.0), s.tensor({4}, 0.5, 3.0)},
                [](const std::vector<Tensor>& in) { return signed_pow(in[0], in[1]); }};
    }
    throw ConfigError("gradcheck: unknown layer '" + layer + "'");
}

std::vector<std::string> input_names(const std::string& layer) {
    if (layer == "conv2d") return {"x", "weight", "bias"};
    if (layer == "scs2d") return {"x", "weight", "p_raw", "q_raw"};
    if (layer == "cossim2d") return {"x", "weight", "q_raw"};
    if (layer == "sdp2d") return {"x", "weight", "p_raw"};
    if (layer == "batchnorm2d") return {"x", "gamma", "beta"};
    if (layer == "linear") return {"x", "weight", "bias"};
    if (layer == "signed_pow") return {"u", "p"};
    return {"x"};
}

}  // namespace

std::vector<std::string> gradcheck_layers() {
    return {"conv2d", "scs2d", "cossim2d", "sdp2d", "maxpool2d",
            "maxabspool2d", "batchnorm2d", "linear", "relu", "signed_pow"};
}

GradcheckReport gradcheck_layer(const std::string& layer, std::size_t instances, std::uint64_t seed,
                                double threshold) {
    GradcheckReport rep;
    rep.layer = layer;
    rep.inputs = input_names(layer);
    rep.max_error.assign(rep.inputs.size(), 0.0);
    rep.instances = instances;
    rep.threshold = threshold;
    Sampler sampler{std::mt19937_64(derive_seed(seed, "gradcheck/" + layer))};
    for (std::size_t i = 0; i < instances; ++i) {
        Instance inst = make_instance(layer, sampler);
        GradcheckResult r = gradcheck(inst.fn, inst.inputs, mix_seed(seed + i));
        for (std::size_t k = 0; k < r.per_input.size(); ++k) {
            rep.max_error[k] = std::max(rep.max_error[k], r.per_input[k]);
        }
    }
    return rep;
}

std::vector<GradcheckReport> gradcheck_suite(const std::vector<std::string>& layers, std::size_t instances,
                                             std::uint64_t seed, double threshold) {
    const auto names = layers.empty() ? gradcheck_layers() : layers;
    std::vector<GradcheckReport> out;
    for (const auto& name : names) out.push_back(gradcheck_layer(name, instances, seed, threshold));
    return out;
}

}  // namespace scs::analysis

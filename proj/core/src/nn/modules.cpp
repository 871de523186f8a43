#include "scs/nn/modules.hpp"

#include <cmath>

#include "scs/ops.hpp"

namespace scs::nn {

Tensor FeatureLayer::forward(const Tensor& x, ForwardContext& ctx) {
    return emit(ctx, feature2d(feature_, x, params_));
}

void FeatureLayer::collect_parameters(std::vector<NamedTensor>& out) {
    out.push_back({name() + ".weight", params_.weight});
    if (params_.bias.defined()) out.push_back({name() + ".bias", params_.bias});
    if (params_.p_raw.defined()) out.push_back({name() + ".p_raw", params_.p_raw});
    if (params_.q_raw.defined()) out.push_back({name() + ".q_raw", params_.q_raw});
}

void FeatureLayer::collect_telemetry(std::vector<TelemetryEntry>& out) const {
    TelemetryEntry e{name(), params_.weight, {}, std::nullopt};
    if (feature_ == FeatureKind::scs || feature_ == FeatureKind::sdp) {
        if (params_.p_mode.is_fixed()) {
            e.p.assign(params_.out_channels(), params_.p_mode.value);
        } else {
            for (double r : params_.p_raw.data()) e.p.push_back(std::exp(r));
        }
    }
    if (feature_ == FeatureKind::scs || feature_ == FeatureKind::cossim) {
        e.q = params_.effective_q().item();
    }
    out.push_back(std::move(e));
}

Tensor ReluLayer::forward(const Tensor& x, ForwardContext& ctx) { return emit(ctx, relu(x)); }

Tensor PoolLayer::forward(const Tensor& x, ForwardContext& ctx) {
    return emit(ctx, pool2d(pool_, x, window_, stride_));
}

BatchNormLayer::BatchNormLayer(std::string name, std::size_t channels)
    : Layer(std::move(name)),
      gamma_(Tensor::ones({channels})),
      beta_(Tensor::zeros({channels})),
      state_(channels) {
    gamma_.set_requires_grad(true);
    beta_.set_requires_grad(true);
}

Tensor BatchNormLayer::forward(const Tensor& x, ForwardContext& ctx) {
    return emit(ctx, batchnorm2d(x, gamma_, beta_, state_, ctx.training));
}

void BatchNormLayer::collect_parameters(std::vector<NamedTensor>& out) {
    out.push_back({name() + ".gamma", gamma_});
    out.push_back({name() + ".beta", beta_});
}

void BatchNormLayer::collect_buffers(std::vector<NamedBuffer>& out) {
    out.push_back({name() + ".running_mean", &state_.running_mean});
    out.push_back({name() + ".running_var", &state_.running_var});
}

void BatchNormLayer::collect_telemetry(std::vector<TelemetryEntry>& out) const {
    out.push_back({name(), gamma_, {}, std::nullopt});
}

Tensor AdaptiveAvgPoolLayer::forward(const Tensor& x, ForwardContext& ctx) {
    return emit(ctx, adaptive_avgpool(x, out_h_, out_w_));
}

Tensor FlattenLayer::forward(const Tensor& x, ForwardContext& ctx) {
    return emit(ctx, flatten(x));
}

Tensor LinearLayer::forward(const Tensor& x, ForwardContext& ctx) {
    return emit(ctx, linear(x, weight_, bias_));
}

void LinearLayer::collect_parameters(std::vector<NamedTensor>& out) {
    out.push_back({name() + ".weight", weight_});
    if (bias_.defined()) out.push_back({name() + ".bias", bias_});
}

void LinearLayer::collect_telemetry(std::vector<TelemetryEntry>& out) const {
    out.push_back({name(), weight_, {}, std::nullopt});
}

Tensor NormalizeLayer::forward(const Tensor& x, ForwardContext& ctx) {
    return emit(ctx, normalize_channels(x, mean_, stddev_));
}

Tensor Sequential::forward(const Tensor& x, ForwardContext& ctx) {
    Tensor y = x;
    for (auto& layer : layers_) y = layer->forward(y, ctx);
    return y;
}

void Sequential::collect_parameters(std::vector<NamedTensor>& out) {
    for (auto& layer : layers_) layer->collect_parameters(out);
}

void Sequential::collect_buffers(std::vector<NamedBuffer>& out) {
    for (auto& layer : layers_) layer->collect_buffers(out);
}

void Sequential::collect_telemetry(std::vector<TelemetryEntry>& out) const {
    for (const auto& layer : layers_) layer->collect_telemetry(out);
}

Layer& Sequential::add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *layers_.back();
}

Tensor ResidualBlock::forward(const Tensor& x, ForwardContext& ctx) {
    Tensor body = Sequential::forward(x, ctx);
    Tensor skip = (stride_ == 1 && x.dim(1) == out_channels_)
                      ? x
                      : shortcut_subsample_pad(x, stride_, out_channels_);
    Tensor y = scs::add(body, skip);
    if (post_relu_) y = scs::relu(y);
    return emit(ctx, y);
}

}  // namespace scs::nn

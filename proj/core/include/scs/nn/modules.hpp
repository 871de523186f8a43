#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scs/nn/functional.hpp"

namespace scs::nn {

class Layer;

/// Observer called with every leaf layer's output during a forward pass.
using LayerProbe = std::function<void(const Layer&, const Tensor&)>;

struct ForwardContext {
    bool training = false;
    LayerProbe probe;
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

/// Non-trainable state that must survive a checkpoint (batchnorm statistics).
struct NamedBuffer {
    std::string name;
    std::vector<double>* values;
};

/// What the training telemetry records for one layer.
struct TelemetryEntry {
    std::string layer;
    Tensor weight;
    std::vector<double> p;  // empty unless the layer sharpens
    std::optional<double> q;
};

class Layer {
  public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;
    Layer(const Layer&) = delete;
    Layer& operator=(const Layer&) = delete;

    const std::string& name() const { return name_; }
    virtual std::string kind() const = 0;
    virtual Tensor forward(const Tensor& x, ForwardContext& ctx) = 0;

    virtual void collect_parameters(std::vector<NamedTensor>&) {}
    virtual void collect_buffers(std::vector<NamedBuffer>&) {}
    virtual void collect_telemetry(std::vector<TelemetryEntry>&) const {}

  protected:
    Tensor emit(ForwardContext& ctx, Tensor y) const {
        if (ctx.probe) ctx.probe(*this, y);
        return y;
    }

  private:
    std::string name_;
};

class FeatureLayer final : public Layer {
  public:
    FeatureLayer(std::string name, FeatureKind kind, ConvLikeParams params)
        : Layer(std::move(name)), feature_(kind), params_(std::move(params)) {}

    std::string kind() const override { return to_string(feature_); }
    Tensor forward(const Tensor& x, ForwardContext& ctx) override;
    void collect_parameters(std::vector<NamedTensor>& out) override;
    void collect_telemetry(std::vector<TelemetryEntry>& out) const override;

    FeatureKind feature() const { return feature_; }
    const ConvLikeParams& params() const { return params_; }
    ConvLikeParams& params() { return params_; }

  private:
    FeatureKind feature_;
    ConvLikeParams params_;
};

class ReluLayer final : public Layer {
  public:
    using Layer::Layer;
    std::string kind() const override { return "relu"; }
    Tensor forward(const Tensor& x, ForwardContext& ctx) override;
};

class PoolLayer final : public Layer {
  public:
    PoolLayer(std::string name, PoolKind kind, std::size_t window, std::size_t stride)
        : Layer(std::move(name)), pool_(kind), window_(window), stride_(stride) {}
    std::string kind() const override { return to_string(pool_); }
    Tensor forward(const Tensor& x, ForwardContext& ctx) override;

  private:
    PoolKind pool_;
    std::size_t window_, stride_;
};

class BatchNormLayer final : public Layer {
  public:
    BatchNormLayer(std::string name, std::size_t channels);
    std::string kind() const override { return "batchnorm"; }
    Tensor forward(const Tensor& x, ForwardContext& ctx) override;
    void collect_parameters(std::vector<NamedTensor>& out) override;
    void collect_buffers(std::vector<NamedBuffer>& out) override;
    void collect_telemetry(std::vector<TelemetryEntry>& out) const override;

  private:
    Tensor gamma_, beta_;
    BatchNormState state_;
};

class AdaptiveAvgPoolLayer final : public Layer {
  public:
    AdaptiveAvgPoolLayer(std::string name, std::size_t out_h, std::size_t out_w)
        : Layer(std::move(name)), out_h_(out_h), out_w_(out_w) {}
    std::string kind() const override { return "adaptive_avgpool"; }
    Tensor forward(const Tensor& x, ForwardContext& ctx) override;

  private:
    std::size_t out_h_, out_w_;
};

class FlattenLayer final : public Layer {
  public:
    using Layer::Layer;
    std::string kind() const override { return "flatten"; }
    Tensor forward(const Tensor& x, ForwardContext& ctx) override;
};

class LinearLayer final : public Layer {
  public:
    LinearLayer(std::string name, Tensor weight, Tensor bias)
        : Layer(std::move(name)), weight_(std::move(weight)), bias_(std::move(bias)) {}
    std::string kind() const override { return "linear"; }
    Tensor forward(const Tensor& x, ForwardContext& ctx) override;
    void collect_parameters(std::vector<NamedTensor>& out) override;
    void collect_telemetry(std::vector<TelemetryEntry>& out) const override;

  private:
    Tensor weight_, bias_;
};

class NormalizeLayer final : public Layer {
  public:
    NormalizeLayer(std::string name, std::vector<double> mean, std::vector<double> stddev)
        : Layer(std::move(name)), mean_(std::move(mean)), stddev_(std::move(stddev)) {}
    std::string kind() const override { return "normalize"; }
    Tensor forward(const Tensor& x, ForwardContext& ctx) override;

  private:
    std::vector<double> mean_, stddev_;
};

class Sequential : public Layer {
  public:
    using Layer::Layer;
    std::string kind() const override { return "sequential"; }
    Tensor forward(const Tensor& x, ForwardContext& ctx) override;
    void collect_parameters(std::vector<NamedTensor>& out) override;
    void collect_buffers(std::vector<NamedBuffer>& out) override;
    void collect_telemetry(std::vector<TelemetryEntry>& out) const override;

    Layer& add(std::unique_ptr<Layer> layer);
    template <class L, class... Args>
    L& emplace(Args&&... args) {
        return static_cast<L&>(add(std::make_unique<L>(std::forward<Args>(args)...)));
    }
    std::size_t size() const { return layers_.size(); }

  private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

/// body(x) + shortcut(x), optionally followed by ReLU. The shortcut is the
/// identity when shapes agree and a subsample/zero-pad otherwise.
class ResidualBlock final : public Sequential {
  public:
    ResidualBlock(std::string name, std::size_t stride, std::size_t out_channels, bool post_relu)
        : Sequential(std::move(name)),
          stride_(stride),
          out_channels_(out_channels),
          post_relu_(post_relu) {}
    std::string kind() const override { return "residual"; }
    Tensor forward(const Tensor& x, ForwardContext& ctx) override;

  private:
    std::size_t stride_, out_channels_;
    bool post_relu_;
};

}  // namespace scs::nn

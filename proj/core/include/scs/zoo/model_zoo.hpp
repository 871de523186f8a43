#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scs/nn/modules.hpp"

namespace scs::zoo {

enum class ArchFamily { rohrer_small, rohrer_100k, mini_resnet };
enum class Activation { relu, none };
enum class Normalization { batchnorm, none };

std::string to_string(ArchFamily f);
std::string to_string(Activation a);
std::string to_string(Normalization n);
ArchFamily parse_arch_family(const std::string& s);
Activation parse_activation(const std::string& s);
Normalization parse_normalization(const std::string& s);

/// One cell of the variant grid.
struct LayerVariantConfig {
    nn::FeatureKind layer_kind = nn::FeatureKind::scs;
    Activation activation = Activation::none;
    nn::PoolKind pooling = nn::PoolKind::max;
    Normalization normalization = Normalization::none;
    nn::PMode p_mode;
    ArchFamily arch_family = ArchFamily::rohrer_100k;
    std::uint64_t seed = 0;
    /// Per-channel input standardization inside the model (conv baselines).
    bool standardize = false;

    /// conv without a nonlinearity: builds, but is a known poor performer.
    bool known_degraded() const;
    /// Filesystem-safe identifier, e.g. "rohrer_100k-scs-none-maxpool-none-p_learned-s0".
    std::string cell_name() const;
    /// key=value lines, the same keys `from_kv` accepts.
    std::map<std::string, std::string> to_kv() const;
    static LayerVariantConfig from_kv(const std::map<std::string, std::string>& kv);
};

struct LayerInfo {
    std::string name;
    std::string kind;
    Shape out_shape;  // for a single 3x32x32 input
};

struct ModelDescriptor {
    std::vector<LayerInfo> layers;
    std::vector<std::pair<std::string, Shape>> parameter_shapes;
    std::size_t parameter_count = 0;
    std::size_t batchnorm_parameter_count = 0;
    bool known_degraded = false;

    std::string text() const;
    std::uint64_t hash() const;
};

/// A built network plus its variant config and descriptor.
class Model {
  public:
    Model(LayerVariantConfig cfg, std::unique_ptr<nn::Sequential> root);

    Tensor forward(const Tensor& x);
    Tensor forward(const Tensor& x, const nn::LayerProbe& probe);

    void set_training(bool on) { training_ = on; }
    bool training() const { return training_; }

    std::vector<nn::NamedTensor>& parameters() { return params_; }
    const std::vector<nn::NamedTensor>& parameters() const { return params_; }
    std::vector<nn::NamedBuffer>& buffers() { return buffers_; }
    const std::vector<nn::NamedBuffer>& buffers() const { return buffers_; }
    std::vector<nn::TelemetryEntry> telemetry() const;

    void zero_grad();
    /// Toggles requires_grad on every parameter (used while attacking inputs).
    void set_parameters_trainable(bool on);

    const LayerVariantConfig& config() const { return cfg_; }
    const ModelDescriptor& descriptor() const { return descriptor_; }

    /// Name of the first leaf layer whose output on `x` contains NaN/Inf.
    std::optional<std::string> first_nonfinite_layer(const Tensor& x);

  private:
    LayerVariantConfig cfg_;
    std::unique_ptr<nn::Sequential> root_;
    std::vector<nn::NamedTensor> params_;
    std::vector<nn::NamedBuffer> buffers_;
    ModelDescriptor descriptor_;
    bool training_ = false;
};

/// RAII: eval mode and frozen parameters for input-gradient analyses.
class InputGradScope {
  public:
    explicit InputGradScope(Model& model);
    ~InputGradScope();
    InputGradScope(const InputGradScope&) = delete;
    InputGradScope& operator=(const InputGradScope&) = delete;

  private:
    Model& model_;
    bool was_training_;
};

/// Channel widths of the three RohrerNet stages.
std::vector<std::size_t> rohrer_widths(ArchFamily family);

/// Deterministic: the same (family, seed) gives byte-identical initial weights
/// for every layer kind, since each tensor is drawn from a stream keyed by
/// (seed, parameter name).
std::unique_ptr<Model> build_model(const LayerVariantConfig& cfg);

}  // namespace scs::zoo

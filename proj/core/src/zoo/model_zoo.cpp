#include "scs/zoo/model_zoo.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "scs/autograd.hpp"
#include "scs/hash.hpp"

namespace scs::zoo {

using nn::FeatureKind;

std::string to_string(ArchFamily f) {
    switch (f) {
        case ArchFamily::rohrer_small: return "rohrer_small";
        case ArchFamily::rohrer_100k: return "rohrer_100k";
        case ArchFamily::mini_resnet: return "mini_resnet";
    }
    return "?";
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "none"; }

std::string to_string(Normalization n) { return n == Normalization::batchnorm ? "batchnorm" : "none"; }

ArchFamily parse_arch_family(const std::string& s) {
    if (s == "rohrer_small") return ArchFamily::rohrer_small;
    if (s == "rohrer_100k") return ArchFamily::rohrer_100k;
    if (s == "mini_resnet") return ArchFamily::mini_resnet;
    throw ConfigError("unknown architecture family '" + s +
                      "' (expected rohrer_small|rohrer_100k|mini_resnet)");
}

Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "none") return Activation::none;
    throw ConfigError("unknown activation '" + s + "' (expected relu|none)");
}

Normalization parse_normalization(const std::string& s) {
    if (s == "batchnorm") return Normalization::batchnorm;
    if (s == "none") return Normalization::none;
    throw ConfigError("unknown normalization '" + s + "' (expected batchnorm|none)");
}

bool LayerVariantConfig::known_degraded() const {
    return layer_kind == FeatureKind::conv && activation == Activation::none;
}

std::string LayerVariantConfig::cell_name() const {
    std::string p = nn::to_string(p_mode);
    for (char& c : p) {
        if (c == ':') c = '_';
    }
    return to_string(arch_family) + "-" + nn::to_string(layer_kind) + "-" + to_string(activation) +
           "-" + nn::to_string(pooling) + "-" + to_string(normalization) + "-p_" + p +
           (standardize ? "-std" : "") + "-s" + std::to_string(seed);
}

std::map<std::string, std::string> LayerVariantConfig::to_kv() const {
    return {{"layer", nn::to_string(layer_kind)},
            {"activation", to_string(activation)},
            {"pooling", nn::to_string(pooling)},
            {"norm", to_string(normalization)},
            {"p_mode", nn::to_string(p_mode)},
            {"family", to_string(arch_family)},
            {"seed", std::to_string(seed)},
            {"standardize", standardize ? "true" : "false"}};
}

LayerVariantConfig LayerVariantConfig::from_kv(const std::map<std::string, std::string>& kv) {
    auto get = [&](const std::string& k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw ConfigError("model config missing key '" + k + "'");
        return it->second;
    };
    LayerVariantConfig c;
    c.layer_kind = nn::parse_feature_kind(get("layer"));
    c.activation = parse_activation(get("activation"));
    c.pooling = nn::parse_pool_kind(get("pooling"));
    c.normalization = parse_normalization(get("norm"));
    c.p_mode = nn::parse_p_mode(get("p_mode"));
    c.arch_family = parse_arch_family(get("family"));
    try {
        c.seed = std::stoull(get("seed"));
    } catch (const std::exception&) {
        throw ConfigError("model seed is not an unsigned integer");
    }
    const std::string& st = get("standardize");
    if (st != "true" && st != "false") throw ConfigError("standardize must be true|false");
    c.standardize = st == "true";
    return c;
}

std::string ModelDescriptor::text() const {
    std::ostringstream os;
    for (const auto& l : layers) os << "layer " << l.name << ' ' << l.kind << ' ' << shape_str(l.out_shape) << '\n';
    for (const auto& [name, shape] : parameter_shapes) os << "param " << name << ' ' << shape_str(shape) << '\n';
    os << "parameters " << parameter_count << '\n';
    return os.str();
}

std::uint64_t ModelDescriptor::hash() const { return fnv1a(text()); }

Model::Model(LayerVariantConfig cfg, std::unique_ptr<nn::Sequential> root)
    : cfg_(cfg), root_(std::move(root)) {
    root_->collect_parameters(params_);
    root_->collect_buffers(buffers_);

    descriptor_.known_degraded = cfg_.known_degraded();
    for (const auto& p : params_) {
        descriptor_.parameter_shapes.emplace_back(p.name, p.tensor.shape());
        descriptor_.parameter_count += p.tensor.numel();
    }
    for (const auto& p : params_) {
        if (p.name.find(".gamma") != std::string::npos || p.name.find(".beta") != std::string::npos) {
            descriptor_.batchnorm_parameter_count += p.tensor.numel();
        }
    }

    NoGradGuard no_grad;
    nn::ForwardContext ctx;
    ctx.training = false;
    ctx.probe = [this](const nn::Layer& layer, const Tensor& y) {
        Shape s = y.shape();
        s.erase(s.begin());
        descriptor_.layers.push_back({layer.name(), layer.kind(), std::move(s)});
    };
    root_->forward(Tensor::zeros({1, 3, 32, 32}), ctx);
}

Tensor Model::forward(const Tensor& x) {
    nn::ForwardContext ctx;
    ctx.training = training_;
    return root_->forward(x, ctx);
}

Tensor Model::forward(const Tensor& x, const nn::LayerProbe& probe) {
    nn::ForwardContext ctx;
    ctx.training = training_;
    ctx.probe = probe;
    return root_->forward(x, ctx);
}

std::vector<nn::TelemetryEntry> Model::telemetry() const {
    std::vector<nn::TelemetryEntry> out;
    root_->collect_telemetry(out);
    return out;
}

void Model::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

void Model::set_parameters_trainable(bool on) {
    for (auto& p : params_) p.tensor.set_requires_grad(on);
}

std::optional<std::string> Model::first_nonfinite_layer(const Tensor& x) {
    NoGradGuard no_grad;
    std::optional<std::string> found;
    // Running stats must not move during a diagnostic pass.
    std::vector<std::vector<double>> saved;
    for (auto& b : buffers_) saved.push_back(*b.values);
    if (!all_finite(x.data())) return std::string("input");
    forward(x, [&](const nn::Layer& layer, const Tensor& y) {
        if (!found && !all_finite(y.data())) found = layer.name();
    });
    for (std::size_t i = 0; i < buffers_.size(); ++i) *buffers_[i].values = saved[i];
    return found;
}

InputGradScope::InputGradScope(Model& model) : model_(model), was_training_(model.training()) {
    model_.set_training(false);
    model_.set_parameters_trainable(false);
}

InputGradScope::~InputGradScope() {
    model_.set_parameters_trainable(true);
    model_.set_training(was_training_);
}

std::vector<std::size_t> rohrer_widths(ArchFamily family) {
    switch (family) {
        case ArchFamily::rohrer_small: return {16, 32, 64};
        case ArchFamily::rohrer_100k: return {32, 64, 128};
        case ArchFamily::mini_resnet: break;
    }
    throw ConfigError("rohrer_widths: not a RohrerNet family");
}

namespace {

Tensor uniform_init(std::uint64_t seed, const std::string& name, Shape shape, double bound) {
    std::mt19937_64 rng(derive_seed(seed, name));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = dist(rng);
    Tensor t = Tensor::from_vector(std::move(shape), std::move(v));
    t.set_requires_grad(true);
    return t;
}

class Builder {
  public:
    explicit Builder(const LayerVariantConfig& cfg) : cfg_(cfg) {}

    void feature(nn::Sequential& seq, const std::string& name, std::size_t in, std::size_t out,
                 std::size_t stride) {
        nn::ConvLikeParams p;
        const double fan_in = static_cast<double>(in * 9);
        const double bound = 1.0 / std::sqrt(fan_in);
        p.weight = uniform_init(cfg_.seed, name + ".weight", {out, in, 3, 3}, bound);
        p.stride = stride;
        p.padding = 1;
        const FeatureKind kind = cfg_.layer_kind;
        if (kind == FeatureKind::conv) {
            p.bias = uniform_init(cfg_.seed, name + ".bias", {out}, bound);
        }
        if (kind == FeatureKind::scs || kind == FeatureKind::sdp) {
            p.p_mode = cfg_.p_mode;
            if (!p.p_mode.is_fixed()) {
                p.p_raw = Tensor::zeros({out});
                p.p_raw.set_requires_grad(true);
            }
        } else {
            p.p_mode = nn::PMode::fixed(1.0);
        }
        if (kind == FeatureKind::scs || kind == FeatureKind::cossim) {
            p.q_raw = Tensor::full({1}, nn::inverse_softplus(0.1));
            p.q_raw.set_requires_grad(true);
        }
        seq.emplace<nn::FeatureLayer>(name, kind, std::move(p));
    }

    void maybe_norm(nn::Sequential& seq, const std::string& name, std::size_t channels) {
        if (cfg_.normalization == Normalization::batchnorm) {
            seq.emplace<nn::BatchNormLayer>(name, channels);
        }
    }

    void maybe_act(nn::Sequential& seq, const std::string& name) {
        if (cfg_.activation == Activation::relu) seq.emplace<nn::ReluLayer>(name);
    }

    void pool(nn::Sequential& seq, const std::string& name) {
        seq.emplace<nn::PoolLayer>(name, cfg_.pooling, 2, 2);
    }

    void head(nn::Sequential& seq, std::size_t in) {
        seq.emplace<nn::AdaptiveAvgPoolLayer>("gap", 1, 1);
        seq.emplace<nn::FlattenLayer>("flatten");
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        seq.emplace<nn::LinearLayer>("head", uniform_init(cfg_.seed, "head.weight", {10, in}, bound),
                                     uniform_init(cfg_.seed, "head.bias", {10}, bound));
    }

    void input(nn::Sequential& seq) {
        if (cfg_.standardize) {
            seq.emplace<nn::NormalizeLayer>("input_norm", std::vector<double>{0.4914, 0.4822, 0.4465},
                                            std::vector<double>{0.2470, 0.2435, 0.2616});
        }
    }

    std::unique_ptr<nn::Sequential> rohrer() {
        auto seq = std::make_unique<nn::Sequential>("net");
        input(*seq);
        const auto widths = rohrer_widths(cfg_.arch_family);
        std::size_t in = 3;
        for (std::size_t i = 0; i < widths.size(); ++i) {
            const std::string k = std::to_string(i + 1);
            feature(*seq, "fe" + k, in, widths[i], 1);
            maybe_norm(*seq, "bn" + k, widths[i]);
            maybe_act(*seq, "act" + k);
            pool(*seq, "pool" + k);
            in = widths[i];
        }
        head(*seq, in);
        return seq;
    }

    std::unique_ptr<nn::Sequential> mini_resnet() {
        auto seq = std::make_unique<nn::Sequential>("net");
        input(*seq);
        feature(*seq, "stem", 3, 16, 1);
        maybe_norm(*seq, "stem_bn", 16);
        maybe_act(*seq, "stem_act");
        pool(*seq, "stem_pool");
        const std::size_t widths[] = {16, 32, 64};
        std::size_t in = 16;
        for (std::size_t s = 0; s < 3; ++s) {
            for (std::size_t b = 0; b < 2; ++b) {
                const std::string name = "s" + std::to_string(s + 1) + "b" + std::to_string(b + 1);
                const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
                auto& block = seq->emplace<nn::ResidualBlock>(
                    name, stride, widths[s], cfg_.activation == Activation::relu);
                feature(block, name + ".fe1", in, widths[s], stride);
                maybe_norm(block, name + ".bn1", widths[s]);
                maybe_act(block, name + ".act1");
                feature(block, name + ".fe2", widths[s], widths[s], 1);
                maybe_norm(block, name + ".bn2", widths[s]);
                in = widths[s];
            }
        }
        head(*seq, in);
        return seq;
    }

  private:
    const LayerVariantConfig& cfg_;
};

}  // namespace

std::unique_ptr<Model> build_model(const LayerVariantConfig& cfg) {
    if (cfg.p_mode.is_fixed() && !(cfg.p_mode.value > 0.0)) {
        throw ConfigError("fixed p must be positive");
    }
    Builder b(cfg);
    std::unique_ptr<nn::Sequential> root;
    switch (cfg.arch_family) {
        case ArchFamily::rohrer_small:
        case ArchFamily::rohrer_100k: root = b.rohrer(); break;
        case ArchFamily::mini_resnet: root = b.mini_resnet(); break;
        default: throw ConfigError("unknown architecture family");
    }
    return std::make_unique<Model>(cfg, std::move(root));
}

}  // namespace scs::zoo

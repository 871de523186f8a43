#include "scs/analysis/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "scs/autograd.hpp"
#include "scs/ops.hpp"

namespace scs::analysis {

std::string to_string(ChannelReduction r) {
    return r == ChannelReduction::max_abs ? "max_abs" : "mean_abs";
}

ChannelReduction parse_channel_reduction(const std::string& s) {
    if (s == "max_abs" || s == "max") return ChannelReduction::max_abs;
    if (s == "mean_abs" || s == "mean") return ChannelReduction::mean_abs;
    throw ConfigError("unknown channel reduction '" + s + "' (expected max_abs or mean_abs)");
}

namespace {

SaliencyMap saliency_impl(const Classifier& classify, const Tensor& image, int class_idx,
                          ChannelReduction reduction) {
    Shape shape = image.shape();
    if (shape.size() == 3) shape.insert(shape.begin(), 1);
    if (shape.size() != 4 || shape[0] != 1) {
        throw ShapeError("saliency expects a (3,H,W) or (1,3,H,W) image, got " + shape_str(image.shape()));
    }
    auto src = image.data();
    Tensor x = Tensor::from_vector(shape, std::vector<double>(src.begin(), src.end()));
    x.set_requires_grad(true);
    Tensor logits = classify(x);
    if (logits.ndim() != 2 || logits.dim(0) != 1) {
        throw ShapeError("classifier must return (1, K) logits, got " + shape_str(logits.shape()));
    }
    if (class_idx < 0 || static_cast<std::size_t>(class_idx) >= logits.dim(1)) {
        throw DomainError("saliency class " + std::to_string(class_idx) + " out of range");
    }
    Tensor target = slice(logits, 1, static_cast<std::size_t>(class_idx), static_cast<std::size_t>(class_idx) + 1);
    SaliencyMap map;
    map.target_class = class_idx;
    map.logit = target.item();
    map.reduction = reduction;
    map.height = shape[2];
    map.width = shape[3];
    map.values.assign(map.height * map.width, 0.0);
    backward(sum(target));

    auto g = x.grad();
    if (g.empty()) return map;  // logit independent of the input
    if (!all_finite(g)) throw NumericError("non-finite saliency gradient");
    const std::size_t c = shape[1], hw = map.height * map.width;
    for (std::size_t i = 0; i < hw; ++i) {
        double acc = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double v = std::abs(g[ch * hw + i]);
            acc = reduction == ChannelReduction::max_abs ? std::max(acc, v) : acc + v;
        }
        map.values[i] = reduction == ChannelReduction::max_abs ? acc : acc / static_cast<double>(c);
    }
    const double peak = *std::max_element(map.values.begin(), map.values.end());
    if (peak > 0.0) {
        for (double& v : map.values) v /= peak;
    }
    return map;
}

}  // namespace

SaliencyMap saliency_map(const Classifier& classify, const Tensor& image, int class_idx,
                         ChannelReduction reduction) {
    return saliency_impl(classify, image, class_idx, reduction);
}

SaliencyMap saliency_map(zoo::Model& model, const Tensor& image, int class_idx, ChannelReduction reduction) {
    zoo::InputGradScope scope(model);
    return saliency_impl([&model](const Tensor& x) { return model.forward(x); }, image, class_idx, reduction);
}

double gini(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    std::vector<double> v(values.begin(), values.end());
    for (double x : v) {
        if (x < 0.0) throw DomainError("gini expects non-negative values");
    }
    std::sort(v.begin(), v.end());
    double total = 0.0, weighted = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += v[i];
        weighted += static_cast<double>(i + 1) * v[i];
    }
    if (total <= 0.0) return 0.0;
    const double nd = static_cast<double>(n);
    return (2.0 * weighted) / (nd * total) - (nd + 1.0) / nd;
}

double sparsity_index(const SaliencyMap& map) { return gini(map.values); }

void write_pgm(const std::filesystem::path& path, const SaliencyMap& map) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << map.width << ' ' << map.height << "\n255\n";
    std::vector<unsigned char> bytes(map.values.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const double v = std::clamp(map.values[i], 0.0, 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_saliency_sidecar(const std::filesystem::path& path, const SaliencyMap& map) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[64];
    out << "image=" << map.image_id << '\n';
    out << "class=" << map.target_class << '\n';
    std::snprintf(buf, sizeof buf, "%.10g", map.logit);
    out << "logit=" << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.10g", sparsity_index(map));
    out << "sparsity=" << buf << '\n';
    out << "reduction=" << to_string(map.reduction) << '\n';
    out << "normalization=" << map.normalization << '\n';
}

}  // namespace scs::analysis

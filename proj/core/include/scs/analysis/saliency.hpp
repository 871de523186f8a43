#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scs/analysis/pgd.hpp"

namespace scs::analysis {

enum class ChannelReduction { max_abs, mean_abs };

std::string to_string(ChannelReduction r);
ChannelReduction parse_channel_reduction(const std::string& s);

/// Per-pixel attribution |d logit_class / d pixel| reduced over color
/// channels, then divided by its maximum (an all-zero map stays zero).
struct SaliencyMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;
    std::size_t image_id = 0;
    int target_class = 0;
    double logit = 0.0;
    ChannelReduction reduction = ChannelReduction::max_abs;
    std::string normalization = "max";

    double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

/// `image` is (3,H,W) or (1,3,H,W).
SaliencyMap saliency_map(const Classifier& classify, const Tensor& image, int class_idx,
                         ChannelReduction reduction = ChannelReduction::max_abs);
SaliencyMap saliency_map(zoo::Model& model, const Tensor& image, int class_idx,
                         ChannelReduction reduction = ChannelReduction::max_abs);

/// Gini coefficient of non-negative values: 0 for uniform mass, (n-1)/n for a
/// single spike. All-zero input gives 0.
double gini(std::span<const double> values);
double sparsity_index(const SaliencyMap& map);

/// Binary PGM (P5, maxval 255), values scaled by 255 and rounded.
void write_pgm(const std::filesystem::path& path, const SaliencyMap& map);
/// key=value text: image, class, logit, sparsity, reduction, normalization.
void write_saliency_sidecar(const std::filesystem::path& path, const SaliencyMap& map);

}  // namespace scs::analysis

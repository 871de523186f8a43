#pragma once

#include <cstdint>
#include <random>

#include "scs/tensor.hpp"

namespace scs::data {

struct AugmentationConfig {
    bool enabled = true;
    std::size_t crop_pad = 4;
    double flip_prob = 0.5;
};

/// Random crop from a zero-padded image plus random horizontal flip, applied
/// independently per image of an NCHW batch. Returns a new leaf tensor.
Tensor augment(const Tensor& batch, const AugmentationConfig& cfg, std::mt19937_64& rng);

/// Window of size (H, W) at offset (dy, dx) of the image zero-padded by `pad`
/// on every side. Offset (pad, pad) reproduces the input.
Tensor crop_padded(const Tensor& batch, std::size_t pad, std::size_t dy, std::size_t dx);

/// Mirrors the width axis.
Tensor hflip(const Tensor& batch);

}  // namespace scs::data

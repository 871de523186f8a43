#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "scs/data/dataset.hpp"

namespace scs::data {

inline constexpr std::size_t kSignalLength = 64;
inline constexpr std::size_t kTemplateLength = 8;

/// The fixed 8-sample feature used by the 1-D detector demo.
const std::array<double, kTemplateLength>& feature_template();

enum class SignalKind { feature_present, feature_absent };

struct Signal1d {
    std::vector<double> values;      // length 64
    std::vector<std::uint8_t> mask;  // 1 where the template was embedded
    std::size_t offset = 0;          // template start (meaningful when present)
    double amplitude = 1.0;
};

/// Length-64 signal with the template embedded at a random offset (or not),
/// scaled by `amplitude`, plus N(0, sigma^2) noise.
Signal1d synth_1d_signal(SignalKind kind, double sigma, std::uint64_t seed, double amplitude = 1.0);

/// Class-structured 32x32 RGB images: each class has its own color/stripe
/// pattern with per-image jitter and noise, so small models can learn it.
Dataset synthetic_cifar(std::size_t n, std::uint64_t seed, const std::string& split);

/// Uniform-noise images with uniformly random labels.
Dataset random_cifar(std::size_t n, std::uint64_t seed, const std::string& split);

}  // namespace scs::data

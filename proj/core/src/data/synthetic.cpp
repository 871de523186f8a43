#include "scs/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "scs/hash.hpp"

namespace scs::data {

const std::array<double, kTemplateLength>& feature_template() {
    static const std::array<double, kTemplateLength> t{1.0, 3.0, -2.0, 4.0, -1.0, 2.0, -3.0, 1.0};
    return t;
}

Signal1d synth_1d_signal(SignalKind kind, double sigma, std::uint64_t seed, double amplitude) {
    if (sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
    std::mt19937_64 rng(derive_seed(seed, "signal1d"));
    Signal1d s;
    s.values.assign(kSignalLength, 0.0);
    s.mask.assign(kSignalLength, 0);
    s.amplitude = amplitude;
    std::uniform_int_distribution<std::size_t> pos(0, kSignalLength - kTemplateLength);
    s.offset = pos(rng);
    if (kind == SignalKind::feature_present) {
        const auto& t = feature_template();
        for (std::size_t k = 0; k < kTemplateLength; ++k) {
            s.values[s.offset + k] = amplitude * t[k];
            s.mask[s.offset + k] = 1;
        }
    }
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma);
        for (double& v : s.values) v += noise(rng);
    }
    return s;
}

Dataset synthetic_cifar(std::size_t n, std::uint64_t seed, const std::string& split) {
    Dataset ds;
    ds.split = split;
    ds.labels.resize(n);
    ds.pixels.resize(n * kImageBytes);
    std::mt19937_64 rng(derive_seed(seed, "synthetic_cifar/" + split));
    std::normal_distribution<double> noise(0.0, 0.08);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % kNumClasses;
        ds.labels[i] = static_cast<std::uint8_t>(c);
        const double ph = phase(rng);
        // colour bias and stripe direction/frequency are class-specific
        const double base[3] = {0.3 + 0.05 * static_cast<double>(c % 5),
                                0.5 - 0.04 * static_cast<double>(c),
                                0.35 + 0.03 * static_cast<double>((c * 7) % 10)};
        const double freq = 0.25 + 0.15 * static_cast<double>(c % 4);
        const bool vertical = (c / 4) % 2 == 0;
        const bool diagonal = c >= 8;
        for (std::size_t ch = 0; ch < kChannels; ++ch)
            for (std::size_t y = 0; y < kImageSide; ++y)
                for (std::size_t x = 0; x < kImageSide; ++x) {
                    const double t = diagonal ? static_cast<double>(x + y)
                                              : static_cast<double>(vertical ? x : y);
                    double v = base[ch] + 0.25 * std::sin(freq * t + ph) + noise(rng);
                    v = std::clamp(v, 0.0, 1.0);
                    ds.pixels[i * kImageBytes + (ch * kImageSide + y) * kImageSide + x] =
                        static_cast<std::uint8_t>(std::lround(v * 255.0));
                }
    }
    ds.subset.count = n;
    ds.checksum = fnv1a(ds.pixels);
    return ds;
}

Dataset random_cifar(std::size_t n, std::uint64_t seed, const std::string& split) {
    Dataset ds;
    ds.split = split;
    ds.labels.resize(n);
    ds.pixels.resize(n * kImageBytes);
    std::mt19937_64 rng(derive_seed(seed, "random_cifar/" + split));
    std::uniform_int_distribution<int> byte(0, 255);
    std::uniform_int_distribution<int> label(0, static_cast<int>(kNumClasses) - 1);
    for (auto& l : ds.labels) l = static_cast<std::uint8_t>(label(rng));
    for (auto& p : ds.pixels) p = static_cast<std::uint8_t>(byte(rng));
    ds.subset.count = n;
    ds.checksum = fnv1a(ds.pixels);
    return ds;
}

}  // namespace scs::data

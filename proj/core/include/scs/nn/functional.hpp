#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "scs/tensor.hpp"

namespace scs::nn {

/// Which feature extractor occupies a conv slot.
enum class FeatureKind { conv, cossim, scs, sdp };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& s);

/// Sharpening exponent mode: learned per output channel as exp(p_raw), or
/// pinned to a constant.
struct PMode {
    enum class Kind { learned, fixed } kind = Kind::learned;
    double value = 1.0;  // only meaningful when fixed

    static PMode learned() { return {}; }
    static PMode fixed(double v) { return {Kind::fixed, v}; }
    bool is_fixed() const { return kind == Kind::fixed; }
};

std::string to_string(const PMode& mode);
PMode parse_p_mode(const std::string& s);

/// Parameters shared by the four conv-like layers.
///
/// `weight` is (out, in, kh, kw). `bias` is only used by conv. `p_raw` holds
/// one log-exponent per output channel (sharpened variants, learned p mode).
/// `q_raw` is a scalar with q = softplus(q_raw); `q_fixed` overrides it.
struct ConvLikeParams {
    Tensor weight;
    Tensor bias;
    Tensor p_raw;
    Tensor q_raw;
    PMode p_mode;
    std::optional<double> q_fixed;
    std::size_t stride = 1;
    std::size_t padding = 0;

    std::size_t out_channels() const { return weight.dim(0); }
    /// (out,) tensor of exp(p_raw), or constants in fixed mode.
    Tensor effective_p() const;
    /// Scalar tensor softplus(q_raw), or the fixed value.
    Tensor effective_q() const;
};

/// Floor applied to ||k|| and to the full SCS denominator.
inline constexpr double kNormFloor = 1e-12;

/// q_raw value whose softplus equals q.
double inverse_softplus(double q);

Tensor conv2d(const Tensor& x, const ConvLikeParams& params);

/// sign(u)*|u|^p with u = s.k / ((||s|| + q) * ||k||) per patch and kernel.
Tensor scs2d(const Tensor& x, const ConvLikeParams& params);

/// scs2d with p pinned to 1.
Tensor cossim2d(const Tensor& x, const ConvLikeParams& params);

/// Unnormalized sharpening: sign(s.k) * |s.k|^p.
Tensor sdp2d(const Tensor& x, const ConvLikeParams& params);

Tensor feature2d(FeatureKind kind, const Tensor& x, const ConvLikeParams& params);

enum class PoolKind { max, maxabs };

std::string to_string(PoolKind kind);
PoolKind parse_pool_kind(const std::string& s);

/// Per window, the largest element. Ties go to the first element in row-major
/// window order, which is also where the gradient is routed.
Tensor maxpool2d(const Tensor& x, std::size_t window, std::size_t stride);

/// Per window, the signed element with the largest magnitude (first
/// occurrence on ties). The gradient is routed to that element.
Tensor maxabspool2d(const Tensor& x, std::size_t window, std::size_t stride);

Tensor pool2d(PoolKind kind, const Tensor& x, std::size_t window, std::size_t stride);

struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    explicit BatchNormState(std::size_t channels = 0)
        : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

/// Per-channel normalization of NCHW input. Training mode normalizes with the
/// biased batch variance and folds the unbiased one into the running stats.
Tensor batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, bool training);

/// x (N, in) times W (out, in) transposed, plus b (out).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Average pooling onto an (out_h, out_w) grid with floor/ceil bin edges.
Tensor adaptive_avgpool(const Tensor& x, std::size_t out_h, std::size_t out_w);

/// (N, ...) -> (N, prod(...)).
Tensor flatten(const Tensor& x);

/// Parameter-free residual shortcut: spatial subsampling by `stride` and zero
/// padding of the channel dimension up to `out_channels`.
Tensor shortcut_subsample_pad(const Tensor& x, std::size_t stride, std::size_t out_channels);

/// (x - mean_c) / std_c with fixed per-channel constants.
Tensor normalize_channels(const Tensor& x, const std::vector<double>& mean,
                          const std::vector<double>& stddev);

}  // namespace scs::nn

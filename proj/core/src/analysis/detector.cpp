#include "scs/analysis/detector.hpp"

#include "scs/autograd.hpp"
#include "scs/errors.hpp"
#include "scs/nn/functional.hpp"

namespace scs::analysis {

std::string to_string(DetectorMode m) { return m == DetectorMode::conv ? "conv" : "scs"; }

DetectorMode parse_detector_mode(const std::string& s) {
    if (s == "conv") return DetectorMode::conv;
    if (s == "scs") return DetectorMode::scs;
    throw ConfigError("unknown detector mode '" + s + "' (expected conv or scs)");
}

std::vector<double> detector_response_1d(std::span<const double> kernel, std::span<const double> signal,
                                         DetectorMode mode) {
    if (kernel.empty() || kernel.size() > signal.size()) {
        throw ShapeError("detector kernel length " + std::to_string(kernel.size()) +
                         " must be in [1, signal length " + std::to_string(signal.size()) + "]");
    }
    NoGradGuard no_grad;
    const std::size_t n = signal.size(), k = kernel.size();
    Tensor x = Tensor::from_vector({1, 1, 1, n}, std::vector<double>(signal.begin(), signal.end()));
    nn::ConvLikeParams params;
    params.weight = Tensor::from_vector({1, 1, 1, k}, std::vector<double>(kernel.begin(), kernel.end()));
    Tensor out;
    if (mode == DetectorMode::conv) {
        params.bias = Tensor::zeros({1});
        out = nn::conv2d(x, params);
    } else {
        params.p_mode = nn::PMode::fixed(kDetectorP);
        params.q_fixed = kDetectorQ;
        out = nn::scs2d(x, params);
    }
    return out.to_vector();
}

}  // namespace scs::analysis

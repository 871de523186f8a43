#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "scs/autograd.hpp"
#include "scs/data/synthetic.hpp"
#include "scs/nn/functional.hpp"
#include "scs/ops.hpp"
#include "scs/train/trainer.hpp"
#include "scs/zoo/model_zoo.hpp"

namespace {

using namespace scs;

Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = u(rng);
    return Tensor::from_vector(shape, std::move(v));
}

/// Stage-1 sized layer: (batch, 16, 32, 32) in, 32 kernels of 3x3, padding 1.
struct LayerCase {
    Tensor x;
    nn::ConvLikeParams params;

    LayerCase(nn::FeatureKind kind, std::size_t batch, bool requires_grad) {
        x = random_tensor({batch, 16, 32, 32}, 1, 0.0, 1.0);
        params.weight = random_tensor({32, 16, 3, 3}, 2);
        params.padding = 1;
        if (kind == nn::FeatureKind::conv) params.bias = Tensor::zeros({32});
        if (kind == nn::FeatureKind::scs || kind == nn::FeatureKind::sdp) params.p_raw = Tensor::zeros({32});
        if (kind == nn::FeatureKind::scs || kind == nn::FeatureKind::cossim)
            params.q_raw = Tensor::scalar(nn::inverse_softplus(0.1));
        x.set_requires_grad(requires_grad);
        for (Tensor* t : {&params.weight, &params.bias, &params.p_raw, &params.q_raw}) {
            if (t->defined()) t->set_requires_grad(requires_grad);
        }
    }
};

void BM_FeatureForward(benchmark::State& state, nn::FeatureKind kind) {
    LayerCase c(kind, static_cast<std::size_t>(state.range(0)), false);
    NoGradGuard guard;
    for (auto _ : state) benchmark::DoNotOptimize(nn::feature2d(kind, c.x, c.params));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_FeatureForwardBackward(benchmark::State& state, nn::FeatureKind kind) {
    LayerCase c(kind, static_cast<std::size_t>(state.range(0)), true);
    for (auto _ : state) {
        c.x.zero_grad();
        c.params.weight.zero_grad();
        backward(sum(nn::feature2d(kind, c.x, c.params)));
        benchmark::DoNotOptimize(c.x.grad().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK_CAPTURE(BM_FeatureForward, conv2d, nn::FeatureKind::conv)->Arg(8)->Arg(32);
BENCHMARK_CAPTURE(BM_FeatureForward, scs2d, nn::FeatureKind::scs)->Arg(8)->Arg(32);
BENCHMARK_CAPTURE(BM_FeatureForward, cossim2d, nn::FeatureKind::cossim)->Arg(8)->Arg(32);
BENCHMARK_CAPTURE(BM_FeatureForward, sdp2d, nn::FeatureKind::sdp)->Arg(8)->Arg(32);
BENCHMARK_CAPTURE(BM_FeatureForwardBackward, conv2d, nn::FeatureKind::conv)->Arg(8)->Arg(32);
BENCHMARK_CAPTURE(BM_FeatureForwardBackward, scs2d, nn::FeatureKind::scs)->Arg(8)->Arg(32);
BENCHMARK_CAPTURE(BM_FeatureForwardBackward, sdp2d, nn::FeatureKind::sdp)->Arg(8)->Arg(32);

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Tensor a = random_tensor({n, n}, 3), b = random_tensor({n, n}, 4);
    NoGradGuard guard;
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * 2 * state.range(0) * state.range(0) * state.range(0));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_MaxAbsPool(benchmark::State& state) {
    Tensor x = random_tensor({32, 32, 32, 32}, 5);
    NoGradGuard guard;
    for (auto _ : state) benchmark::DoNotOptimize(nn::maxabspool2d(x, 2, 2));
}
BENCHMARK(BM_MaxAbsPool);

/// One optimizer step of a full model on a batch of 32 images.
void BM_TrainStep(benchmark::State& state, zoo::ArchFamily family, nn::FeatureKind kind) {
    zoo::LayerVariantConfig cfg;
    cfg.arch_family = family;
    cfg.layer_kind = kind;
    auto model = zoo::build_model(cfg);
    const data::Dataset ds = data::synthetic_cifar(32, 1, "train");
    train::TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 32;
    tc.augmentation.enabled = false;
    for (auto _ : state) benchmark::DoNotOptimize(train::train(*model, ds, nullptr, tc));
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK_CAPTURE(BM_TrainStep, rohrer_small_scs, zoo::ArchFamily::rohrer_small, nn::FeatureKind::scs)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainStep, rohrer_100k_scs, zoo::ArchFamily::rohrer_100k, nn::FeatureKind::scs)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainStep, rohrer_100k_conv, zoo::ArchFamily::rohrer_100k, nn::FeatureKind::conv)
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include "scs/analysis/pgd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "scs/autograd.hpp"
#include "scs/hash.hpp"
#include "scs/ops.hpp"

namespace scs::analysis {

std::vector<double> default_epsilons() {
    std::vector<double> eps(8);
    const double lo = std::log(0.001), hi = std::log(0.030);
    for (std::size_t i = 0; i < eps.size(); ++i) {
        eps[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / 7.0);
    }
    eps.front() = 0.001;
    eps.back() = 0.030;
    return eps;
}

double AttackConfig::step_size(double epsilon) const {
    return epsilon * step_scale / static_cast<double>(steps);
}

void AttackConfig::validate() const {
    if (steps < 1) throw ConfigError("attack.steps must be >= 1");
    if (!(step_scale > 0.0)) throw ConfigError("attack.step_scale must be > 0");
    for (double e : epsilons) {
        if (!(e >= 0.0)) throw ConfigError("attack epsilons must be >= 0");
    }
}

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Tensor attack_impl(const Classifier& classify, const Tensor& x0, std::span<const int> labels,
                   const AttackConfig& cfg, double epsilon,
                   const std::function<std::string(const Tensor&)>& locate) {
    cfg.validate();
    if (epsilon < 0.0) throw DomainError("epsilon must be >= 0");
    const double step = cfg.step_size(epsilon);
    auto base = x0.data();
    std::vector<double> x(base.begin(), base.end());
    if (cfg.random_start && epsilon > 0.0) {
        std::mt19937_64 rng(derive_seed(cfg.seed, "pgd/start"));
        std::uniform_real_distribution<double> u(-epsilon, epsilon);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(base[i] + u(rng), 0.0, 1.0);
    }
    for (std::size_t s = 0; s < cfg.steps; ++s) {
        Tensor xv = Tensor::from_vector(x0.shape(), x);
        xv.set_requires_grad(true);
        Tensor loss = cross_entropy(classify(xv), labels);
        backward(loss);
        auto g = xv.grad();
        if (g.empty()) continue;  // loss independent of the input
        if (!all_finite(g)) {
            throw NumericError("non-finite input gradient during PGD step " + std::to_string(s) +
                               "; offending layer: " + (locate ? locate(xv.detach()) : std::string("unknown")));
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            double v = x[i] + step * sgn(g[i]);
            v = std::clamp(v, base[i] - epsilon, base[i] + epsilon);
            x[i] = std::clamp(v, 0.0, 1.0);
        }
    }
    return Tensor::from_vector(x0.shape(), std::move(x));
}

}  // namespace

Tensor pgd_attack(const Classifier& classify, const Tensor& x0, std::span<const int> labels,
                  const AttackConfig& cfg, double epsilon) {
    return attack_impl(classify, x0, labels, cfg, epsilon, {});
}

Tensor pgd_attack(zoo::Model& model, const Tensor& x0, std::span<const int> labels,
                  const AttackConfig& cfg, double epsilon) {
    zoo::InputGradScope scope(model);
    return attack_impl([&model](const Tensor& x) { return model.forward(x); }, x0, labels, cfg,
                       epsilon, [&model](const Tensor& x) {
                           return model.first_nonfinite_layer(x).value_or("<backward only>");
                       });
}

std::vector<SweepPoint> robustness_sweep(zoo::Model& model, const data::Dataset& eval_set,
                                         const AttackConfig& cfg, std::size_t batch_size) {
    cfg.validate();
    if (batch_size == 0) throw UsageError("sweep batch size must be >= 1");
    std::vector<SweepPoint> out;
    std::vector<std::size_t> idx;
    for (double eps : cfg.epsilons) {
        std::size_t correct = 0;
        for (std::size_t start = 0; start < eval_set.size(); start += batch_size) {
            const std::size_t stop = std::min(eval_set.size(), start + batch_size);
            idx.resize(stop - start);
            std::iota(idx.begin(), idx.end(), start);
            Tensor x0 = eval_set.batch(idx);
            auto labels = eval_set.batch_labels(idx);
            Tensor adv = pgd_attack(model, x0, labels, cfg, eps);
            NoGradGuard no_grad;
            const bool was_training = model.training();
            model.set_training(false);
            Tensor logits = model.forward(adv);
            model.set_training(was_training);
            const std::size_t k = logits.dim(1);
            auto d = logits.data();
            for (std::size_t r = 0; r < idx.size(); ++r) {
                const double* row = d.data() + r * k;
                if (std::max_element(row, row + k) - row == labels[r]) ++correct;
            }
        }
        const double acc = eval_set.size() ? static_cast<double>(correct) / static_cast<double>(eval_set.size()) : 0.0;
        out.push_back({eps, acc, eval_set.size()});
    }
    return out;
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepPoint> points) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "epsilon,accuracy,n_eval\n";
    char buf[96];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%zu\n", p.epsilon, p.accuracy, p.n_eval);
        out << buf;
    }
}

}  // namespace scs::analysis

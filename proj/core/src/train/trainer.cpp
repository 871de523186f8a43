#include "scs/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "scs/autograd.hpp"
#include "scs/errors.hpp"
#include "scs/hash.hpp"
#include "scs/ops.hpp"
#include "scs/train/checkpoint.hpp"

namespace scs::train {

namespace {

double l2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::size_t count_correct(const Tensor& logits, std::span<const int> labels) {
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    auto d = logits.data();
    std::size_t correct = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = d.data() + r * k;
        const auto pred = static_cast<int>(std::max_element(row, row + k) - row);
        if (pred == labels[r]) ++correct;
    }
    return correct;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<LayerNorms> track_norms(const zoo::Model& model) {
    std::vector<LayerNorms> out;
    for (const auto& e : model.telemetry()) {
        LayerNorms n;
        n.layer = e.layer;
        n.weight_norm = l2(e.weight.data());
        n.grad_norm = e.weight.has_grad() ? l2(e.weight.grad()) : 0.0;
        n.p = e.p;
        n.q = e.q;
        out.push_back(std::move(n));
    }
    return out;
}

EvalResult evaluate(zoo::Model& model, const data::Dataset& ds, std::size_t batch_size) {
    if (batch_size == 0) throw UsageError("evaluate: batch size must be >= 1");
    NoGradGuard no_grad;
    const bool was_training = model.training();
    model.set_training(false);
    EvalResult r;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < ds.size(); start += batch_size) {
        const std::size_t stop = std::min(ds.size(), start + batch_size);
        idx.resize(stop - start);
        std::iota(idx.begin(), idx.end(), start);
        Tensor x = ds.batch(idx);
        auto labels = ds.batch_labels(idx);
        Tensor logits = model.forward(x);
        loss_sum += cross_entropy(logits, labels).item() * static_cast<double>(idx.size());
        correct += count_correct(logits, labels);
    }
    model.set_training(was_training);
    r.count = ds.size();
    if (r.count > 0) {
        r.loss = loss_sum / static_cast<double>(r.count);
        r.accuracy = static_cast<double>(correct) / static_cast<double>(r.count);
    }
    return r;
}

std::vector<std::string> telemetry_header(const zoo::Model& model) {
    std::vector<std::string> cols = {"epoch",    "train_loss",   "train_acc",  "test_loss",
                                     "test_acc", "train_time_s", "eval_time_s"};
    for (const auto& n : track_norms(model)) {
        cols.push_back(n.layer + ".w_norm");
        cols.push_back(n.layer + ".g_norm");
        for (std::size_t k = 0; k < n.p.size(); ++k) cols.push_back(n.layer + ".p[" + std::to_string(k) + "]");
        if (n.q) cols.push_back(n.layer + ".q");
    }
    return cols;
}

std::string telemetry_row(const ExperimentRecord& rec) {
    std::string row = std::to_string(rec.epoch) + "," + num(rec.train_loss) + "," + num(rec.train_acc) + "," +
                      (rec.test_loss ? num(*rec.test_loss) : "") + "," +
                      (rec.test_acc ? num(*rec.test_acc) : "") + "," + num(rec.train_time_s) + "," +
                      num(rec.eval_time_s);
    for (const auto& n : rec.layers) {
        row += "," + num(n.weight_norm) + "," + num(n.grad_norm);
        for (double p : n.p) row += "," + num(p);
        if (n.q) row += "," + num(*n.q);
    }
    return row;
}

std::vector<ExperimentRecord> train(zoo::Model& model, const data::Dataset& train_set,
                                    const data::Dataset* test_set, const TrainConfig& cfg,
                                    const TrainOutputs& outputs) {
    if (cfg.batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
    if (cfg.epochs > 0 && train_set.size() == 0) throw ConfigError("empty training set");

    std::ofstream csv;
    if (outputs.dir) {
        std::filesystem::create_directories(*outputs.dir);
        save_checkpoint(model, *outputs.dir / "initial.ckpt");
        csv.open(*outputs.dir / "telemetry.csv", std::ios::binary | std::ios::trunc);
        if (!csv) throw std::runtime_error("cannot write telemetry in " + outputs.dir->string());
        const auto header = telemetry_header(model);
        for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
        csv << '\n' << std::flush;
    }

    const std::size_t steps_per_epoch = (train_set.size() + cfg.batch_size - 1) / cfg.batch_size;
    OneCycleSchedule schedule{cfg.max_lr, std::max<std::size_t>(1, cfg.epochs * steps_per_epoch),
                              cfg.pct_start, cfg.div_factor, cfg.final_div_factor};
    Adam adam(cfg.adam);
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "train/shuffle"));
    std::mt19937_64 augment_rng(derive_seed(cfg.seed, "train/augment"));

    std::vector<ExperimentRecord> records;
    std::optional<double> best;
    std::size_t global_step = 0;
    std::vector<std::size_t> order(train_set.size());

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        model.set_training(true);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        ExperimentRecord rec;
        rec.epoch = epoch;
        double loss_sum = 0.0;
        std::size_t correct = 0;
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::span<const std::size_t> idx(order.data() + start, stop - start);
            Tensor x = data::augment(train_set.batch(idx), cfg.augmentation, augment_rng);
            auto labels = train_set.batch_labels(idx);

            model.zero_grad();
            Tensor logits;
            try {
                logits = model.forward(x);
            } catch (const DomainError& e) {
                // parameters were driven out of their domain (e.g. p underflowed to 0)
                throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(global_step) + ": " + e.what());
            }
            Tensor loss = cross_entropy(logits, labels);
            if (!std::isfinite(loss.item())) {
                auto layer = model.first_nonfinite_layer(x);
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(global_step) + "; first non-finite activation in layer '" +
                                   layer.value_or("<none: logits finite, loss overflowed>") + "'");
            }
            backward(loss);
            adam.step(model.parameters(), schedule.lr(static_cast<double>(global_step)));
            ++global_step;
            ++rec.optimizer_steps;
            loss_sum += loss.item() * static_cast<double>(idx.size());
            correct += count_correct(logits, labels);
        }
        rec.train_time_s = seconds_since(t0);
        rec.train_loss = loss_sum / static_cast<double>(train_set.size());
        rec.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());

        const auto t1 = std::chrono::steady_clock::now();
        if (test_set != nullptr && test_set->size() > 0) {
            EvalResult ev;
            try {
                ev = evaluate(model, *test_set, cfg.eval_batch_size);
            } catch (const DomainError& e) {
                throw NumericError("training diverged by the end of epoch " + std::to_string(epoch) + ": " +
                                   e.what());
            }
            rec.test_loss = ev.loss;
            rec.test_acc = ev.accuracy;
        }
        rec.eval_time_s = seconds_since(t1);
        rec.layers = track_norms(model);

        if (outputs.dir) {
            csv << telemetry_row(rec) << '\n' << std::flush;
            save_checkpoint(model, *outputs.dir / "final.ckpt");
            const double score = rec.test_acc.value_or(rec.train_acc);
            if (!best || score > *best) {
                best = score;
                save_checkpoint(model, *outputs.dir / "best.ckpt");
            }
        }
        if (outputs.on_epoch) outputs.on_epoch(rec);
        const bool stop = outputs.stop_when && outputs.stop_when(rec);
        records.push_back(std::move(rec));
        if (stop) break;
    }
    model.set_training(false);
    return records;
}

}  // namespace scs::train

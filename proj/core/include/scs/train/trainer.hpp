#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scs/data/augment.hpp"
#include "scs/data/dataset.hpp"
#include "scs/train/optim.hpp"
#include "scs/zoo/model_zoo.hpp"

namespace scs::train {

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 128;
    std::size_t eval_batch_size = 256;
    double max_lr = 0.01;
    double pct_start = 0.3;
    double div_factor = 25.0;
    double final_div_factor = 1e4;
    AdamConfig adam;
    data::AugmentationConfig augmentation;
    std::uint64_t seed = 0;
};

struct LayerNorms {
    std::string layer;
    double weight_norm = 0.0;
    double grad_norm = 0.0;  // 0 when no gradient has been computed yet
    std::vector<double> p;
    std::optional<double> q;
};

/// One telemetry row.
struct ExperimentRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    std::optional<double> test_loss;
    std::optional<double> test_acc;
    double train_time_s = 0.0;
    double eval_time_s = 0.0;
    std::size_t optimizer_steps = 0;
    std::vector<LayerNorms> layers;
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
    std::size_t count = 0;
};

/// Per-layer weight and gradient L2 norms plus p/q snapshots, one entry per
/// layer that owns a weight.
std::vector<LayerNorms> track_norms(const zoo::Model& model);

/// Mean loss and accuracy in eval mode, serial batches in index order.
EvalResult evaluate(zoo::Model& model, const data::Dataset& ds, std::size_t batch_size = 256);

std::vector<std::string> telemetry_header(const zoo::Model& model);
std::string telemetry_row(const ExperimentRecord& rec);

struct TrainOutputs {
    /// When set: telemetry.csv plus initial/final/best checkpoints go here.
    std::optional<std::filesystem::path> dir;
    std::function<void(const ExperimentRecord&)> on_epoch;
    /// Ends training early once this returns true for an epoch's record.
    std::function<bool(const ExperimentRecord&)> stop_when;
};

/// Adam + one-cycle training. Reproducible bit-for-bit for a fixed config and
/// seed. Throws NumericError naming the first layer with a non-finite
/// activation if the loss stops being finite.
std::vector<ExperimentRecord> train(zoo::Model& model, const data::Dataset& train_set,
                                    const data::Dataset* test_set, const TrainConfig& cfg,
                                    const TrainOutputs& outputs = {});

}  // namespace scs::train

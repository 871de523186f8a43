#include "commands.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "scs/analysis/detector.hpp"
#include "scs/analysis/gradcheck.hpp"
#include "scs/analysis/pgd.hpp"
#include "scs/analysis/saliency.hpp"
#include "scs/autograd.hpp"
#include "scs/data/dataset.hpp"
#include "scs/data/synthetic.hpp"
#include "scs/errors.hpp"
#include "scs/train/checkpoint.hpp"
#include "scs/train/trainer.hpp"
#include "scs/zoo/model_zoo.hpp"

namespace scsnet {
namespace {

namespace fs = std::filesystem;
using scs::ConfigError;

struct Splits {
    scs::data::Dataset train;
    scs::data::Dataset test;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path require_out(const Invocation& inv, const char* command) {
    if (!inv.out) throw ConfigError(std::string("--out is required for ") + command);
    return *inv.out;
}

/// Refuses to touch existing artifacts unless --force. Never writes.
void check_outputs(const std::vector<fs::path>& paths, bool force) {
    if (force) return;
    for (const auto& p : paths) {
        if (fs::exists(p)) throw ConfigError("refusing to overwrite " + p.string() + " (pass --force)");
    }
}

void clear_outputs(const std::vector<fs::path>& paths) {
    for (const auto& p : paths) fs::remove_all(p);
}

template <class Parse>
auto parse_key(const std::string& key, const std::string& value, Parse parse) {
    try {
        return parse(value);
    } catch (const ConfigError& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

Splits load_data(const RunConfig& cfg) {
    const std::string source = cfg.text("data.source");
    const std::size_t n_train = cfg.integer("data.train_size");
    const std::size_t n_test = cfg.integer("data.test_size");
    const bool stratified = cfg.boolean("data.stratified");
    const std::uint64_t seed = cfg.integer("data.seed");

    if (source == "synthetic") {
        if (n_train == 0 || n_test == 0)
            throw ConfigError("config key 'data.train_size'/'data.test_size': synthetic data needs explicit sizes");
        return {scs::data::synthetic_cifar(n_train, seed, "train"),
                scs::data::synthetic_cifar(n_test, seed + 1, "test")};
    }
    if (source != "cifar10")
        throw ConfigError("config key 'data.source': unknown source '" + source + "' (expected cifar10|synthetic)");

    const std::string dir = cfg.text("data.dir");
    if (dir.empty()) throw DataError("no dataset directory given (use --data-dir or data.dir)");
    if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir);
    auto [train, test] = scs::data::load_cifar10(dir);
    auto shrink = [&](scs::data::Dataset& ds, std::size_t n, const char* key) {
        if (n == 0 || n == ds.size()) return;
        if (n > ds.size())
            throw ConfigError(std::string("config key '") + key + "': asks for " + std::to_string(n) +
                              " images but only " + std::to_string(ds.size()) + " are available");
        ds = scs::data::subset(ds, n, stratified, seed);
    };
    shrink(train, n_train, "data.train_size");
    shrink(test, n_test, "data.test_size");
    return {std::move(train), std::move(test)};
}

scs::train::TrainConfig train_config(const RunConfig& cfg) {
    scs::train::TrainConfig tc;
    tc.epochs = cfg.integer("train.epochs");
    tc.batch_size = cfg.integer("train.batch_size");
    tc.eval_batch_size = cfg.integer("train.eval_batch_size");
    tc.max_lr = cfg.real("train.max_lr");
    tc.pct_start = cfg.real("train.pct_start");
    tc.div_factor = cfg.real("train.div_factor");
    tc.final_div_factor = cfg.real("train.final_div_factor");
    tc.adam.beta1 = cfg.real("train.beta1");
    tc.adam.beta2 = cfg.real("train.beta2");
    tc.adam.eps = cfg.real("train.eps");
    tc.adam.weight_decay = cfg.real("train.weight_decay");
    tc.augmentation.enabled = cfg.boolean("aug.enabled");
    tc.augmentation.crop_pad = cfg.integer("aug.crop_pad");
    tc.augmentation.flip_prob = cfg.real("aug.flip_prob");

    auto require = [](bool ok, const char* key, const char* what) {
        if (!ok) throw ConfigError(std::string("config key '") + key + "' must be " + what);
    };
    require(tc.batch_size >= 1, "train.batch_size", ">= 1");
    require(tc.eval_batch_size >= 1, "train.eval_batch_size", ">= 1");
    require(tc.max_lr > 0.0, "train.max_lr", "> 0");
    require(tc.pct_start > 0.0 && tc.pct_start < 1.0, "train.pct_start", "in (0, 1)");
    require(tc.div_factor > 0.0, "train.div_factor", "> 0");
    require(tc.final_div_factor > 0.0, "train.final_div_factor", "> 0");
    require(tc.adam.beta1 >= 0.0 && tc.adam.beta1 < 1.0, "train.beta1", "in [0, 1)");
    require(tc.adam.beta2 >= 0.0 && tc.adam.beta2 < 1.0, "train.beta2", "in [0, 1)");
    require(tc.adam.eps > 0.0, "train.eps", "> 0");
    require(tc.adam.weight_decay >= 0.0, "train.weight_decay", ">= 0");
    require(tc.augmentation.flip_prob >= 0.0 && tc.augmentation.flip_prob <= 1.0, "aug.flip_prob", "in [0, 1]");
    return tc;
}

/// Cross product in a fixed order; seeds vary fastest.
std::vector<scs::zoo::LayerVariantConfig> expand_grid(const RunConfig& cfg) {
    using namespace scs;
    std::vector<zoo::ArchFamily> families;
    for (const auto& s : cfg.text_list("grid.family"))
        families.push_back(parse_key("grid.family", s, zoo::parse_arch_family));
    std::vector<nn::FeatureKind> layers;
    for (const auto& s : cfg.text_list("grid.layer"))
        layers.push_back(parse_key("grid.layer", s, nn::parse_feature_kind));
    std::vector<zoo::Activation> acts;
    for (const auto& s : cfg.text_list("grid.activation"))
        acts.push_back(parse_key("grid.activation", s, zoo::parse_activation));
    std::vector<nn::PoolKind> pools;
    for (const auto& s : cfg.text_list("grid.pooling"))
        pools.push_back(parse_key("grid.pooling", s, nn::parse_pool_kind));
    std::vector<zoo::Normalization> norms;
    for (const auto& s : cfg.text_list("grid.norm"))
        norms.push_back(parse_key("grid.norm", s, zoo::parse_normalization));
    std::vector<nn::PMode> pmodes;
    for (const auto& s : cfg.text_list("grid.p_mode"))
        pmodes.push_back(parse_key("grid.p_mode", s, nn::parse_p_mode));
    const auto standardize = cfg.boolean_list("grid.standardize");
    const auto seeds = cfg.integer_list("grid.seeds");

    std::vector<zoo::LayerVariantConfig> cells;
    std::set<std::string> names;
    for (auto f : families)
        for (auto l : layers)
            for (auto a : acts)
                for (auto p : pools)
                    for (auto n : norms)
                        for (const auto& pm : pmodes)
                            for (bool st : standardize)
                                for (auto seed : seeds) {
                                    zoo::LayerVariantConfig c;
                                    c.arch_family = f;
                                    c.layer_kind = l;
                                    c.activation = a;
                                    c.pooling = p;
                                    c.normalization = n;
                                    c.p_mode = pm;
                                    c.standardize = st;
                                    c.seed = seed;
                                    if (!names.insert(c.cell_name()).second)
                                        throw ConfigError("grid lists cell " + c.cell_name() + " twice");
                                    cells.push_back(c);
                                }
    return cells;
}

RunConfig cell_snapshot(const RunConfig& cfg, const scs::zoo::LayerVariantConfig& cell) {
    RunConfig c = cfg;
    auto kv = cell.to_kv();
    c.set("grid.family", kv["family"]);
    c.set("grid.layer", kv["layer"]);
    c.set("grid.activation", kv["activation"]);
    c.set("grid.pooling", kv["pooling"]);
    c.set("grid.norm", kv["norm"]);
    c.set("grid.p_mode", kv["p_mode"]);
    c.set("grid.standardize", kv["standardize"]);
    c.set("grid.seeds", kv["seed"]);
    return c;
}

const char* kSummaryHeader =
    "family,layer,activation,pooling,norm,p_mode,standardize,seed,parameters,epochs,best_test_acc,"
    "train_time_s,eval_time_s";

std::string summary_row(const scs::zoo::Model& model, const std::vector<scs::train::ExperimentRecord>& recs) {
    auto kv = model.config().to_kv();
    std::string row = kv["family"] + "," + kv["layer"] + "," + kv["activation"] + "," + kv["pooling"] + "," +
                      kv["norm"] + "," + kv["p_mode"] + "," + kv["standardize"] + "," + kv["seed"] + "," +
                      std::to_string(model.descriptor().parameter_count) + "," + std::to_string(recs.size());
    std::optional<double> best;
    double train_s = 0.0, eval_s = 0.0;
    for (const auto& r : recs) {
        if (r.test_acc && (!best || *r.test_acc > *best)) best = r.test_acc;
        train_s += r.train_time_s;
        eval_s += r.eval_time_s;
    }
    const double n = static_cast<double>(recs.size());
    row += "," + (best ? format_real(*best) : std::string("null"));
    row += "," + (recs.empty() ? std::string("null") : format_real(train_s / n));
    row += "," + (recs.empty() ? std::string("null") : format_real(eval_s / n));
    return row;
}

std::string run_cell(const scs::zoo::LayerVariantConfig& cell, const Splits& data, scs::train::TrainConfig tc,
                     const fs::path& dir, const RunConfig& cfg) {
    fs::create_directories(dir);
    write_text(dir / "config.resolved", cell_snapshot(cfg, cell).snapshot());
    auto model = scs::zoo::build_model(cell);
    tc.seed = cell.seed;  // seed-matched: the same seed drives init and batch order
    const std::string name = cell.cell_name();
    scs::train::TrainOutputs outputs;
    outputs.dir = dir;
    outputs.on_epoch = [&](const scs::train::ExperimentRecord& r) {
        std::printf("%s epoch %zu/%zu train_loss=%.4f train_acc=%.4f test_acc=%.4f time=%.1fs\n", name.c_str(),
                    r.epoch, tc.epochs, r.train_loss, r.train_acc, r.test_acc.value_or(0.0), r.train_time_s);
        std::fflush(stdout);
    };
    auto recs = scs::train::train(*model, data.train, &data.test, tc, outputs);
    return summary_row(*model, recs);
}

/// One worker process per cell, at most `jobs` alive. Each child leaves its
/// summary row in the cell directory; rows are gathered in grid order.
std::vector<std::string> run_cells_forked(const std::vector<scs::zoo::LayerVariantConfig>& cells,
                                          const Splits& data, const scs::train::TrainConfig& tc,
                                          const fs::path& out, const RunConfig& cfg, std::size_t jobs,
                                          int& status) {
    std::vector<int> codes(cells.size(), kFailed);
    std::map<pid_t, std::size_t> running;
    std::size_t next = 0;
    while (next < cells.size() || !running.empty()) {
        if (next < cells.size() && running.size() < jobs) {
            std::fflush(nullptr);
            const pid_t pid = fork();
            if (pid < 0) throw std::runtime_error("fork failed");
            if (pid == 0) {
                int code = kOk;
                const fs::path dir = out / cells[next].cell_name();
                try {
                    write_text(dir.string() + ".row", run_cell(cells[next], data, tc, dir, cfg));
                } catch (const std::exception& e) {
                    std::fprintf(stderr, "%s: %s\n", cells[next].cell_name().c_str(), e.what());
                    code = exit_code_for(e);
                }
                std::fflush(nullptr);
                std::_Exit(code);
            }
            running[pid] = next++;
            continue;
        }
        int st = 0;
        const pid_t pid = waitpid(-1, &st, 0);
        if (pid < 0) throw std::runtime_error("waitpid failed");
        auto it = running.find(pid);
        if (it == running.end()) continue;
        codes[it->second] = WIFEXITED(st) ? WEXITSTATUS(st) : kFailed;
        running.erase(it);
    }
    std::vector<std::string> rows;
    status = kOk;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const fs::path row_file = (out / cells[i].cell_name()).string() + ".row";
        if (codes[i] == kOk) rows.push_back(read_text(row_file));
        fs::remove(row_file);
        if (codes[i] != kOk && status == kOk) status = codes[i];
    }
    return rows;
}

std::unique_ptr<scs::zoo::Model> load_checkpoint(const RunConfig& cfg) {
    const std::string path = cfg.text("checkpoint");
    if (path.empty()) throw ConfigError("no checkpoint given (use --checkpoint or the checkpoint key)");
    return scs::train::load_model(path);
}

int argmax_row(const scs::Tensor& logits) {
    const auto v = logits.to_vector();
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kConfigError;
    if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const scs::FormatError*>(&e)) return kDataError;
    if (dynamic_cast<const scs::CheckpointError*>(&e)) return kCheckpointError;
    if (dynamic_cast<const scs::NumericError*>(&e)) return kNumericError;
    return kFailed;
}

int cmd_train(const Invocation& inv) {
    const fs::path out = require_out(inv, "train");
    const RunConfig& cfg = inv.config;
    const auto cells = expand_grid(cfg);
    const auto tc = train_config(cfg);

    std::vector<fs::path> artifacts{out / "summary.csv", out / "config.resolved"};
    for (const auto& c : cells) artifacts.push_back(out / c.cell_name());
    check_outputs(artifacts, inv.force);
    const Splits data = load_data(cfg);
    clear_outputs(artifacts);
    fs::create_directories(out);
    write_text(out / "config.resolved", cfg.snapshot());

    std::vector<std::string> rows;
    if (inv.jobs > 1) {
        int status = kOk;
        rows = run_cells_forked(cells, data, tc, out, cfg, inv.jobs, status);
        if (status != kOk) {
            std::fprintf(stderr, "scsnet train: %zu of %zu cells failed; no summary written\n",
                         cells.size() - rows.size(), cells.size());
            return status;
        }
    } else {
        for (const auto& c : cells) rows.push_back(run_cell(c, data, tc, out / c.cell_name(), cfg));
    }

    std::string csv = std::string(kSummaryHeader) + "\n";
    for (const auto& r : rows) csv += r + "\n";
    write_text(out / "summary.csv", csv);
    std::printf("wrote %s (%zu cells)\n", (out / "summary.csv").string().c_str(), rows.size());
    return kOk;
}

int cmd_eval(const Invocation& inv) {
    const RunConfig& cfg = inv.config;
    std::vector<fs::path> artifacts;
    if (inv.out) artifacts = {*inv.out / "eval.csv", *inv.out / "config.resolved"};
    check_outputs(artifacts, inv.force);
    auto model = load_checkpoint(cfg);
    const Splits data = load_data(cfg);
    const auto r = scs::train::evaluate(*model, data.test, cfg.integer("train.eval_batch_size"));
    std::printf("%s: test_loss=%.6f test_acc=%.4f n_eval=%zu\n", model->config().cell_name().c_str(), r.loss,
                r.accuracy, r.count);
    if (inv.out) {
        clear_outputs(artifacts);
        fs::create_directories(*inv.out);
        write_text(*inv.out / "config.resolved", cfg.snapshot());
        write_text(*inv.out / "eval.csv", "loss,accuracy,n_eval\n" + format_real(r.loss) + "," +
                                              format_real(r.accuracy) + "," + std::to_string(r.count) + "\n");
    }
    return kOk;
}

int cmd_attack(const Invocation& inv) {
    const fs::path out = require_out(inv, "attack");
    const RunConfig& cfg = inv.config;
    scs::analysis::AttackConfig ac;
    ac.epsilons = cfg.real_list("attack.epsilons");
    ac.steps = cfg.integer("attack.steps");
    ac.step_scale = cfg.real("attack.step_scale");
    ac.random_start = cfg.boolean("attack.random_start");
    ac.seed = cfg.integer("attack.seed");
    ac.validate();
    const std::size_t batch = cfg.integer("attack.batch_size");
    if (batch == 0) throw ConfigError("config key 'attack.batch_size' must be >= 1");

    const std::vector<fs::path> artifacts{out / "robustness.csv", out / "config.resolved"};
    check_outputs(artifacts, inv.force);
    auto model = load_checkpoint(cfg);
    const Splits data = load_data(cfg);
    const auto points = scs::analysis::robustness_sweep(*model, data.test, ac, batch);

    clear_outputs(artifacts);
    fs::create_directories(out);
    write_text(out / "config.resolved", cfg.snapshot());
    scs::analysis::write_sweep_csv(out / "robustness.csv", points);
    for (const auto& p : points) std::printf("epsilon=%-10g accuracy=%.4f n_eval=%zu\n", p.epsilon, p.accuracy, p.n_eval);
    return kOk;
}

int cmd_saliency(const Invocation& inv) {
    const fs::path out = require_out(inv, "saliency");
    const RunConfig& cfg = inv.config;
    const auto indices = cfg.integer_list("saliency.indices");
    const auto reduction =
        parse_key("saliency.reduction", cfg.text("saliency.reduction"), scs::analysis::parse_channel_reduction);
    const std::string target = cfg.text("saliency.target");
    std::optional<int> fixed_class;
    if (target != "label" && target != "predicted") {
        try {
            std::size_t used = 0;
            const int c = std::stoi(target, &used);
            if (used != target.size() || c < 0 || c >= static_cast<int>(scs::data::kNumClasses))
                throw std::invalid_argument(target);
            fixed_class = c;
        } catch (const std::exception&) {
            throw ConfigError("config key 'saliency.target': expected label|predicted|0..9, got '" + target + "'");
        }
    }
    if (std::set<std::uint64_t>(indices.begin(), indices.end()).size() != indices.size())
        throw ConfigError("config key 'saliency.indices' lists an image twice");

    std::vector<fs::path> artifacts{out / "config.resolved"};
    for (auto i : indices) {
        artifacts.push_back(out / ("saliency_" + std::to_string(i) + ".pgm"));
        artifacts.push_back(out / ("saliency_" + std::to_string(i) + ".txt"));
    }
    check_outputs(artifacts, inv.force);
    auto model = load_checkpoint(cfg);
    const Splits data = load_data(cfg);
    for (auto i : indices) {
        if (i >= data.test.size())
            throw ConfigError("config key 'saliency.indices': image " + std::to_string(i) + " is outside the " +
                              std::to_string(data.test.size()) + "-image test split");
    }

    std::vector<scs::analysis::SaliencyMap> maps;
    for (auto i : indices) {
        const std::vector<std::size_t> one{i};
        const scs::Tensor image = data.test.batch(one);
        int cls = fixed_class.value_or(data.test.labels[i]);
        if (target == "predicted") {
            scs::NoGradGuard guard;
            model->set_training(false);
            cls = argmax_row(model->forward(image));
        }
        auto map = scs::analysis::saliency_map(*model, image, cls, reduction);
        map.image_id = i;
        maps.push_back(std::move(map));
    }

    clear_outputs(artifacts);
    fs::create_directories(out);
    write_text(out / "config.resolved", cfg.snapshot());
    for (const auto& m : maps) {
        const std::string stem = "saliency_" + std::to_string(m.image_id);
        scs::analysis::write_pgm(out / (stem + ".pgm"), m);
        scs::analysis::write_saliency_sidecar(out / (stem + ".txt"), m);
        std::printf("image %zu class %d logit=%.6f sparsity=%.6f\n", m.image_id, m.target_class, m.logit,
                    scs::analysis::sparsity_index(m));
    }
    return kOk;
}

int cmd_gradcheck(const Invocation& inv) {
    const RunConfig& cfg = inv.config;
    auto layers = cfg.text_list("gradcheck.layers");
    if (layers == std::vector<std::string>{"all"}) layers.clear();
    const std::size_t instances = cfg.integer("gradcheck.instances");
    const double threshold = cfg.real("gradcheck.threshold");
    if (instances == 0) throw ConfigError("config key 'gradcheck.instances' must be >= 1");
    if (!(threshold > 0.0)) throw ConfigError("config key 'gradcheck.threshold' must be > 0");
    for (const auto& l : layers) {
        const auto known = scs::analysis::gradcheck_layers();
        if (std::find(known.begin(), known.end(), l) == known.end())
            throw ConfigError("config key 'gradcheck.layers': unknown layer '" + l + "'");
    }
    std::vector<fs::path> artifacts;
    if (inv.out) artifacts = {*inv.out / "gradcheck.csv", *inv.out / "config.resolved"};
    check_outputs(artifacts, inv.force);

    const auto t0 = std::chrono::steady_clock::now();
    const auto reports = scs::analysis::gradcheck_suite(layers, instances, cfg.integer("gradcheck.seed"), threshold);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    bool all_passed = true;
    std::string csv = "layer,input,max_rel_error,instances,threshold,passed\n";
    for (const auto& r : reports) {
        all_passed = all_passed && r.passed();
        std::printf("%-14s worst=%.3e %s\n", r.layer.c_str(), r.worst(), r.passed() ? "PASS" : "FAIL");
        for (std::size_t i = 0; i < r.inputs.size(); ++i) {
            const bool ok = r.max_error[i] < r.threshold;
            std::printf("    %-8s %.3e\n", r.inputs[i].c_str(), r.max_error[i]);
            char line[256];
            std::snprintf(line, sizeof line, "%s,%s,%.6e,%zu,%s,%s\n", r.layer.c_str(), r.inputs[i].c_str(),
                          r.max_error[i], r.instances, format_real(r.threshold).c_str(), ok ? "true" : "false");
            csv += line;
        }
    }
    std::printf("gradcheck: %zu layers, %s, %.1fs\n", reports.size(), all_passed ? "all passed" : "FAILED", secs);
    if (inv.out) {
        clear_outputs(artifacts);
        fs::create_directories(*inv.out);
        write_text(*inv.out / "config.resolved", cfg.snapshot());
        write_text(*inv.out / "gradcheck.csv", csv);
    }
    return all_passed ? kOk : kFailed;
}

int cmd_demo1d(const Invocation& inv) {
    using scs::analysis::DetectorMode;
    const fs::path out = require_out(inv, "demo1d");
    const RunConfig& cfg = inv.config;
    const std::string feature = cfg.text("demo.feature");
    if (feature != "present" && feature != "absent")
        throw ConfigError("config key 'demo.feature': expected present|absent, got '" + feature + "'");
    const double sigma = cfg.real("demo.sigma");
    const double amplitude = cfg.real("demo.amplitude");
    if (!(sigma >= 0.0)) throw ConfigError("config key 'demo.sigma' must be >= 0");
    if (!(amplitude > 0.0)) throw ConfigError("config key 'demo.amplitude' must be > 0");

    const std::vector<fs::path> artifacts{out / "demo1d.csv", out / "signal.csv", out / "config.resolved"};
    check_outputs(artifacts, inv.force);

    const auto kind = feature == "present" ? scs::data::SignalKind::feature_present
                                           : scs::data::SignalKind::feature_absent;
    const auto sig = scs::data::synth_1d_signal(kind, sigma, cfg.integer("demo.seed"), amplitude);
    const auto& kernel = scs::data::feature_template();
    const auto conv = scs::analysis::detector_response_1d(kernel, sig.values, DetectorMode::conv);
    const auto scs_r = scs::analysis::detector_response_1d(kernel, sig.values, DetectorMode::scs);

    std::string resp = "position,conv,scs,template_start\n";
    for (std::size_t i = 0; i < conv.size(); ++i) {
        const bool here = kind == scs::data::SignalKind::feature_present && i == sig.offset;
        resp += std::to_string(i) + "," + format_real(conv[i]) + "," + format_real(scs_r[i]) + "," +
                (here ? "1" : "0") + "\n";
    }
    std::string signal = "index,value,mask\n";
    for (std::size_t i = 0; i < sig.values.size(); ++i)
        signal += std::to_string(i) + "," + format_real(sig.values[i]) + "," + std::to_string(sig.mask[i]) + "\n";

    clear_outputs(artifacts);
    fs::create_directories(out);
    write_text(out / "config.resolved", cfg.snapshot());
    write_text(out / "demo1d.csv", resp);
    write_text(out / "signal.csv", signal);

    auto peak = [](const std::vector<double>& v) {
        return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    };
    if (kind == scs::data::SignalKind::feature_present)
        std::printf("template at %zu\n", sig.offset);
    std::printf("conv peak at %zu (%.6f)\nscs  peak at %zu (%.6f)\n", peak(conv), conv[peak(conv)], peak(scs_r),
                scs_r[peak(scs_r)]);
    return kOk;
}

}  // namespace scsnet

// Acceptance runner. Prints one PASS/FAIL line per criterion; every
// tolerance below is fixed here and not configurable.
//
//   scs_acceptance --suite core                 criteria 1-4, 6, 7 (contract), 9, 10
//   scs_acceptance --suite cifar --cifar-dir D  criteria 5, 7 (trained endpoints), 8
//
// The cifar suite exits 77 (reported as skipped by ctest) when no dataset
// directory is available.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scs/analysis/detector.hpp"
#include "scs/analysis/gradcheck.hpp"
#include "scs/analysis/pgd.hpp"
#include "scs/analysis/saliency.hpp"
#include "scs/autograd.hpp"
#include "scs/data/dataset.hpp"
#include "scs/data/synthetic.hpp"
#include "scs/nn/functional.hpp"
#include "scs/train/trainer.hpp"
#include "scs/zoo/model_zoo.hpp"
#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;
using namespace scs;

constexpr int kSkipExit = 77;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

class Report {
  public:
    /// Smoke reports label every line SMOKE and never fail.
    explicit Report(bool smoke = false) : smoke_(smoke) {}

    void add(const std::string& id, const std::string& name, const Outcome& o) {
        const char* verdict = smoke_ ? "SMOKE" : (o.pass ? "PASS" : "FAIL");
        std::printf("%s  %-4s %-34s %s\n", verdict, id.c_str(), name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        all_pass_ = all_pass_ && (o.pass || smoke_);
    }
    /// Runs `check`, turning an escaped exception into a FAIL line.
    void run(const std::string& id, const std::string& name, const std::function<Outcome()>& check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        add(id, name, o);
    }
    bool all_pass() const { return all_pass_; }

  private:
    bool smoke_;
    bool all_pass_ = true;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("scs_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

zoo::LayerVariantConfig variant(nn::FeatureKind kind, zoo::Activation act, zoo::ArchFamily family,
                                std::uint64_t seed) {
    zoo::LayerVariantConfig c;
    c.layer_kind = kind;
    c.activation = act;
    c.arch_family = family;
    c.seed = seed;
    return c;
}

// ---------------------------------------------------------------- criterion 1

Outcome gradient_audit() {
    const std::clock_t c0 = std::clock();
    const auto reports = analysis::gradcheck_suite({}, 20, 0, 1e-4);
    const double cpu_s = static_cast<double>(std::clock() - c0) / CLOCKS_PER_SEC;
    const std::vector<std::string> expected{"conv2d",      "scs2d",       "cossim2d", "sdp2d", "maxpool2d",
                                            "maxabspool2d", "batchnorm2d", "linear",   "relu",  "signed_pow"};
    bool ok = cpu_s < 120.0;
    std::string worst_layer;
    double worst = 0.0;
    for (const auto& name : expected) {
        auto it = std::find_if(reports.begin(), reports.end(), [&](const auto& r) { return r.layer == name; });
        if (it == reports.end() || it->instances != 20) {
            ok = false;
            worst_layer = name + " (missing)";
            continue;
        }
        ok = ok && it->worst() < 1e-4;
        if (it->worst() >= worst) {
            worst = it->worst();
            worst_layer = name;
        }
    }
    return {ok, fmt("10 layers x 20 instances, worst rel err %.2e (%s) < 1e-4; cpu %.1fs < 120s", worst,
                    worst_layer.c_str(), cpu_s)};
}

// ---------------------------------------------------------------- criterion 2

Outcome reduction_identities() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> small(1, 3);
    double scs_cos = 0.0, sdp_conv = 0.0, pools = 0.0, conv_naive = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = small(rng), c = small(rng), o = small(rng) + 1, k = 2 * small(rng) - 1;
        const std::size_t stride = small(rng), pad = small(rng) - 1;
        const std::size_t h = k + 4 + small(rng), w = k + 3 + small(rng);
        Tensor x = testing::random_tensor({n, c, h, w}, rng);
        Tensor wt = testing::random_tensor({o, c, k, k}, rng);
        Tensor b = testing::random_tensor({o}, rng);

        NoGradGuard g;
        auto a = nn::scs2d(x, testing::fixed_params(wt, 1.0, 0.0, stride, pad)).to_vector();
        auto bb = nn::cossim2d(x, testing::fixed_params(wt, 1.0, 0.0, stride, pad)).to_vector();
        scs_cos = std::max(scs_cos, testing::max_abs_diff(a, bb));

        auto sdp = nn::sdp2d(x, testing::fixed_params(wt, 1.0, std::nullopt, stride, pad)).to_vector();
        auto conv_nb = nn::conv2d(x, testing::fixed_params(wt, 1.0, std::nullopt, stride, pad)).to_vector();
        sdp_conv = std::max(sdp_conv, testing::max_abs_diff(sdp, conv_nb));

        Tensor xp = testing::random_tensor({n, c, h, w}, rng, 0.0, 1.0);
        const std::size_t win = 1 + small(rng) % 2;
        pools = std::max(pools, testing::max_abs_diff(nn::maxabspool2d(xp, win, win).to_vector(),
                                                      nn::maxpool2d(xp, win, win).to_vector()));

        auto prm = testing::fixed_params(wt, 1.0, std::nullopt, stride, pad);
        prm.bias = b;
        conv_naive = std::max(conv_naive, testing::max_abs_diff(nn::conv2d(x, prm).to_vector(),
                                                                testing::naive_conv(x, wt, &b, stride, pad)));
    }
    const double worst = std::max({scs_cos, sdp_conv, pools, conv_naive});
    return {worst <= 1e-12, fmt("25 random shapes; max |diff| scs/cossim %.1e, sdp/conv %.1e, maxabs/max %.1e, "
                                "conv/naive %.1e <= 1e-12",
                                scs_cos, sdp_conv, pools, conv_naive)};
}

// ---------------------------------------------------------------- criterion 3

Outcome boundedness_and_scale() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> chans(1, 4);
    std::uniform_real_distribution<double> pdist(0.25, 4.0), qdist(0.0, 1.0), coin(0.0, 1.0);
    double max_abs = 0.0, max_change = 0.0;
    NoGradGuard g;
    for (int draw = 0; draw < 1000; ++draw) {
        const std::size_t c = chans(rng);
        const double p = pdist(rng);
        const double q = coin(rng) < 0.2 ? 0.0 : qdist(rng);
        Tensor kernel = testing::random_tensor({1, c, 3, 3}, rng);
        Tensor patch = testing::random_tensor({1, c, 3, 3}, rng, -2.0, 2.0);
        if (draw % 3 == 0) {
            // patch (anti-)aligned with the kernel, where |scs2d| approaches 1
            const double scale = (draw % 2 ? -1.0 : 1.0) * std::exp(qdist(rng) * 6.0 - 3.0);
            const double jitter = draw % 9 == 0 ? 0.0 : 1e-3;
            auto pv = patch.mutable_data();
            const auto kv = kernel.data();
            for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = scale * kv[i] + jitter * pv[i];
        }
        const double y = nn::scs2d(patch, testing::fixed_params(kernel, p, q)).item();
        max_abs = std::max(max_abs, std::abs(y));
        for (double scale : {0.1, 10.0}) {
            Tensor scaled = Tensor::from_vector(kernel.shape(), kernel.to_vector());
            for (double& v : scaled.mutable_data()) v *= scale;
            const double ys = nn::scs2d(patch, testing::fixed_params(scaled, p, q)).item();
            max_change = std::max(max_change, std::abs(ys - y));
        }
    }
    return {max_abs <= 1.0 && max_change < 1e-9,
            fmt("1000 draws (1/3 near-aligned): max |scs2d| %.17g <= 1; max change under kernel x0.1/x10 %.1e < 1e-9", max_abs,
                max_change)};
}

// ---------------------------------------------------------------- criterion 4

Outcome detector_demo() {
    using analysis::DetectorMode;
    const auto& kernel = data::feature_template();
    bool ok = true;
    double worst_peak = 0.0, worst_ratio = 0.0, worst_scs_change = 0.0;
    std::size_t misplaced = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s1 = data::synth_1d_signal(data::SignalKind::feature_present, 0.0, seed, 1.0);
        const auto s10 = data::synth_1d_signal(data::SignalKind::feature_present, 0.0, seed, 10.0);
        const auto scs1 = analysis::detector_response_1d(kernel, s1.values, DetectorMode::scs);
        const auto scs10 = analysis::detector_response_1d(kernel, s10.values, DetectorMode::scs);
        const auto conv1 = analysis::detector_response_1d(kernel, s1.values, DetectorMode::conv);
        const auto conv10 = analysis::detector_response_1d(kernel, s10.values, DetectorMode::conv);
        const std::size_t peak = std::max_element(scs1.begin(), scs1.end()) - scs1.begin();
        misplaced += peak != s1.offset || s10.offset != s1.offset;
        worst_peak = std::max(worst_peak, std::abs(scs1[s1.offset] - 1.0));
        worst_ratio = std::max(worst_ratio, std::abs(conv10[s1.offset] / conv1[s1.offset] - 10.0));
        worst_scs_change = std::max(worst_scs_change, std::abs(scs10[s1.offset] - scs1[s1.offset]));
    }
    ok = misplaced == 0 && worst_peak <= 1e-6 && worst_ratio <= 1e-9 && worst_scs_change < 1e-6;
    return {ok, fmt("10 seeds: scs peak misplaced %zu/10; |peak-1| %.1e <= 1e-6; |conv x10 ratio - 10| %.1e <= "
                    "1e-9; scs change %.1e < 1e-6",
                    misplaced, worst_peak, worst_ratio, worst_scs_change)};
}

// ---------------------------------------------------------------- criterion 6

struct OverfitRun {
    std::string name;
    std::size_t epochs = 0;
    double train_acc = 0.0;
    std::unique_ptr<zoo::Model> model;
};

data::Dataset overfit_subset(const std::optional<fs::path>& cifar_dir, std::string& source) {
    if (cifar_dir) {
        source = "CIFAR-10 train";
        return data::subset(data::load_cifar10(*cifar_dir).first, 32, true, 0);
    }
    source = "noise images with random labels";
    return data::random_cifar(32, 6, "train");
}

Outcome overfit(const data::Dataset& ds, const std::string& source, std::vector<OverfitRun>& runs) {
    const std::vector<std::pair<nn::FeatureKind, zoo::Activation>> kinds{
        {nn::FeatureKind::conv, zoo::Activation::relu},
        {nn::FeatureKind::cossim, zoo::Activation::relu},
        {nn::FeatureKind::scs, zoo::Activation::none},
        {nn::FeatureKind::sdp, zoo::Activation::none}};
    train::TrainConfig tc;
    tc.epochs = 200;
    tc.batch_size = 8;
    tc.augmentation.enabled = false;
    bool ok = true;
    std::string detail = "32 fixed samples (" + source + "), 200-epoch budget:";
    for (const auto& [kind, act] : kinds) {
        OverfitRun run;
        auto cfg = variant(kind, act, zoo::ArchFamily::rohrer_small, 0);
        run.name = nn::to_string(kind) + "/" + zoo::to_string(act);
        run.model = zoo::build_model(cfg);
        train::TrainOutputs out;
        out.stop_when = [](const train::ExperimentRecord& r) { return r.train_acc == 1.0; };
        auto recs = train::train(*run.model, ds, nullptr, tc, out);
        run.epochs = recs.size();
        run.train_acc = recs.empty() ? 0.0 : recs.back().train_acc;
        ok = ok && run.train_acc == 1.0;
        detail += fmt(" %s acc %.3f @%zu", run.name.c_str(), run.train_acc, run.epochs);
        runs.push_back(std::move(run));
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- criterion 7 (contract)

Outcome pgd_contract(std::vector<OverfitRun>& runs, const data::Dataset& ds) {
    if (runs.empty()) return {false, "no trained models to attack"};
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    const Tensor x0 = ds.batch(idx);
    const auto labels = ds.batch_labels(idx);
    double worst_ball = 0.0, worst_box = 0.0;
    std::size_t clean_mismatch = 0;
    for (auto& run : runs) {
        auto& model = *run.model;
        const double clean = train::evaluate(model, ds, 16).accuracy;
        analysis::AttackConfig zero;
        zero.epsilons = {0.0};
        const auto pts = analysis::robustness_sweep(model, ds, zero, 16);
        clean_mismatch += pts.size() != 1 || pts[0].accuracy != clean;

        for (bool random_start : {false, true}) {
            analysis::AttackConfig cfg;
            cfg.random_start = random_start;
            cfg.seed = 5;
            for (double eps : cfg.epsilons) {
                const auto xa = analysis::pgd_attack(model, x0, labels, cfg, eps).to_vector();
                const auto xs = x0.to_vector();
                for (std::size_t i = 0; i < xs.size(); ++i) {
                    worst_ball = std::max(worst_ball, std::abs(xa[i] - xs[i]) - eps);
                    worst_box = std::max({worst_box, -xa[i], xa[i] - 1.0});
                }
            }
        }
    }
    const bool ok = clean_mismatch == 0 && worst_ball <= 1e-12 && worst_box <= 1e-12;
    return {ok, fmt("%zu models x 8 eps x {plain, random start}: eps=0 acc != clean in %zu; worst ball excess %.1e, "
                    "box excess %.1e <= 1e-12",
                    runs.size(), clean_mismatch, worst_ball, worst_box)};
}

// ---------------------------------------------------------------- criterion 9

/// Header derived from the parameter list, independently of the trainer.
std::vector<std::string> expected_header(const zoo::Model& m) {
    std::vector<std::string> h{"epoch",   "train_loss",   "train_acc",  "test_loss",
                               "test_acc", "train_time_s", "eval_time_s"};
    std::vector<std::string> layers;
    for (const auto& p : m.parameters()) {
        const auto dot = p.name.rfind('.');
        const std::string layer = p.name.substr(0, dot);
        const std::string leaf = p.name.substr(dot + 1);
        if (leaf == "weight" || leaf == "gamma") layers.push_back(layer);  // batchnorm scale is its weight
    }
    for (const auto& layer : layers) {
        h.push_back(layer + ".w_norm");
        h.push_back(layer + ".g_norm");
        for (const auto& p : m.parameters()) {
            if (p.name == layer + ".p_raw")
                for (std::size_t i = 0; i < p.tensor.numel(); ++i) h.push_back(layer + ".p[" + std::to_string(i) + "]");
        }
        for (const auto& p : m.parameters()) {
            if (p.name == layer + ".q_raw") h.push_back(layer + ".q");
        }
    }
    return h;
}

Outcome telemetry_completeness() {
    const data::Dataset tr = data::synthetic_cifar(48, 11, "train");
    const data::Dataset te = data::synthetic_cifar(16, 12, "test");
    train::TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 16;
    std::vector<zoo::LayerVariantConfig> cells{
        variant(nn::FeatureKind::scs, zoo::Activation::none, zoo::ArchFamily::rohrer_small, 1),
        variant(nn::FeatureKind::sdp, zoo::Activation::relu, zoo::ArchFamily::rohrer_small, 1),
        variant(nn::FeatureKind::scs, zoo::Activation::none, zoo::ArchFamily::mini_resnet, 1)};
    cells.back().normalization = zoo::Normalization::batchnorm;

    std::size_t problems = 0, p_columns = 0, sharpened_layers = 0;
    std::string first;
    auto problem = [&](bool bad, const std::string& what) {
        if (!bad) return;
        if (problems++ == 0) first = what;
    };
    for (const auto& cfg : cells) {
        const auto dir = scratch("telemetry");
        auto m = zoo::build_model(cfg);
        train::train(*m, tr, &te, tc, {dir, {}, {}});
        const auto rows = csv_rows(slurp(dir / "telemetry.csv"));
        const auto want = expected_header(*m);
        const std::string run = cfg.cell_name() + ": ";
        problem(rows.size() != tc.epochs + 1, run + "row count");
        if (rows.empty()) continue;
        for (std::size_t i = 0; i < std::max(want.size(), rows[0].size()); ++i) {
            const std::string w = i < want.size() ? want[i] : "<none>";
            const std::string g = i < rows[0].size() ? rows[0][i] : "<none>";
            problem(w != g, run + "header column " + std::to_string(i) + " is '" + g + "', expected '" + w + "'");
        }
        for (const auto& name : want) p_columns += name.find(".p[") != std::string::npos;
        for (const auto& l : m->descriptor().layers) {
            if (l.kind != "scs" && l.kind != "sdp") continue;
            ++sharpened_layers;
            const bool has_p = std::find(want.begin(), want.end(), l.name + ".p[0]") != want.end();
            problem(!has_p, run + "no p columns for " + l.name);
        }
        for (std::size_t r = 1; r < rows.size(); ++r) {
            problem(rows[r].size() != want.size(), run + "row " + std::to_string(r) + " width");
            for (std::size_t i = 0; i < rows[r].size(); ++i) {
                const auto& cell = rows[r][i];
                char* end = nullptr;
                const double v = std::strtod(cell.c_str(), &end);
                problem(cell.empty() || *end != '\0' || !std::isfinite(v),
                        run + "row " + std::to_string(r) + " column " + std::to_string(i) + " = '" + cell + "'");
            }
            problem(rows[r][0] != std::to_string(r), run + "epoch numbering");
        }
    }
    return {problems == 0, fmt("3 runs x 2 epochs (rohrer scs/sdp, resnet scs+bn): %zu sharpened layers, %zu p "
                               "columns; %zu problems%s%s",
                               sharpened_layers, p_columns, problems, first.empty() ? "" : ", first: ",
                               first.c_str())};
}

// ---------------------------------------------------------------- criterion 10

Outcome determinism() {
    const data::Dataset tr = data::synthetic_cifar(48, 21, "train");
    const data::Dataset te = data::synthetic_cifar(16, 22, "test");
    train::TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 16;
    tc.seed = 3;
    auto cfg = variant(nn::FeatureKind::scs, zoo::Activation::none, zoo::ArchFamily::rohrer_small, 3);
    cfg.normalization = zoo::Normalization::batchnorm;
    std::vector<std::string> telemetry, ckpt;
    for (int run = 0; run < 2; ++run) {
        const auto dir = scratch("determinism" + std::to_string(run));
        auto m = zoo::build_model(cfg);
        train::train(*m, tr, &te, tc, {dir, {}, {}});
        auto rows = csv_rows(slurp(dir / "telemetry.csv"));
        std::string masked;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r > 0) rows[r][5] = rows[r][6] = "*";  // wall-clock seconds
            for (const auto& c : rows[r]) masked += c + ",";
            masked += "\n";
        }
        telemetry.push_back(masked);
        ckpt.push_back(slurp(dir / "final.ckpt"));
    }
    const bool ok = telemetry[0] == telemetry[1] && ckpt[0] == ckpt[1] && !ckpt[0].empty();
    return {ok, fmt("two identical runs: telemetry %s (wall-time columns masked), final checkpoint %s",
                    telemetry[0] == telemetry[1] ? "identical" : "DIFFERS",
                    ckpt[0] == ckpt[1] ? "byte-identical" : "DIFFERS")};
}

// ---------------------------------------------------------------- cifar suite

struct Cell {
    std::string name;
    zoo::LayerVariantConfig cfg;
};

std::vector<Cell> desk_cells(std::uint64_t seed) {
    using nn::FeatureKind;
    using zoo::Activation;
    auto mk = [&](FeatureKind k, Activation a, std::optional<double> fixed_p = std::nullopt) {
        auto c = variant(k, a, zoo::ArchFamily::rohrer_100k, seed);
        if (fixed_p) c.p_mode = nn::PMode::fixed(*fixed_p);
        return c;
    };
    return {{"scs/none", mk(FeatureKind::scs, Activation::none)},
            {"conv/relu", mk(FeatureKind::conv, Activation::relu)},
            {"conv/none", mk(FeatureKind::conv, Activation::none)},
            {"cossim/relu", mk(FeatureKind::cossim, Activation::relu, 1.0)},
            {"cossim/none", mk(FeatureKind::cossim, Activation::none, 1.0)}};
}

struct Scale {
    std::size_t train = 4000, test = 1000, epochs = 30, batch = 128, seeds = 3, pgd_eval = 1000, saliency = 50;
};

int cifar_suite(const fs::path& dir, const Scale& s, bool smoke, Report& report) {
    auto [full_train, full_test] = data::load_cifar10(dir);
    const data::Dataset tr = data::subset(full_train, s.train, true, 0);
    const data::Dataset te = data::subset(full_test, s.test, true, 0);
    std::printf("# cifar suite: %zu train / %zu test, %zu epochs, batch %zu, %zu seeds%s\n", tr.size(), te.size(),
                s.epochs, s.batch, s.seeds, smoke ? " (smoke scale: verdicts not meaningful)" : "");

    std::map<std::string, std::vector<double>> acc;
    std::map<std::string, std::vector<std::unique_ptr<zoo::Model>>> models;
    for (std::uint64_t seed = 0; seed < s.seeds; ++seed) {
        for (auto& cell : desk_cells(seed)) {
            auto m = zoo::build_model(cell.cfg);
            train::TrainConfig tc;
            tc.epochs = s.epochs;
            tc.batch_size = s.batch;
            tc.seed = seed;
            const auto t0 = std::chrono::steady_clock::now();
            auto recs = train::train(*m, tr, &te, tc);
            const double final_acc = recs.empty() ? 0.0 : recs.back().test_acc.value_or(0.0);
            std::printf("#   %-12s seed %llu: final test acc %.4f (%.0fs)\n", cell.name.c_str(),
                        static_cast<unsigned long long>(seed), final_acc,
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            std::fflush(stdout);
            acc[cell.name].push_back(final_acc);
            models[cell.name].push_back(std::move(m));
        }
    }

    report.run("5", "desk-scale directional accuracy", [&] {
        const double scs = median(acc["scs/none"]), conv = median(acc["conv/relu"]);
        const double conv_lin = median(acc["conv/none"]);
        const double cos_relu = median(acc["cossim/relu"]), cos_lin = median(acc["cossim/none"]);
        const bool a = std::abs(scs - conv) <= 0.05 && scs >= 0.45 && conv >= 0.45;
        const bool b = conv - conv_lin >= 0.05;
        const bool c = cos_relu - cos_lin >= 0.05;
        return Outcome{a && b && c,
                       fmt("medians: (a) scs/none %.4f vs conv/relu %.4f, gap <= 0.05, both >= 0.45 %s; "
                           "(b) conv relu-none %.4f >= 0.05 %s; (c) cossim relu-none %.4f >= 0.05 %s",
                           scs, conv, a ? "ok" : "NO", conv - conv_lin, b ? "ok" : "NO", cos_relu - cos_lin,
                           c ? "ok" : "NO")};
    });

    report.run("7b", "PGD endpoints on trained models", [&] {
        const data::Dataset eval_set = data::subset(te, std::min(s.pgd_eval, te.size()), true, 0);
        analysis::AttackConfig cfg;
        cfg.epsilons = {0.001, 0.030};
        bool ok = true;
        std::string detail;
        for (const auto& cell : desk_cells(0)) {
            const auto pts = analysis::robustness_sweep(*models[cell.name][0], eval_set, cfg, 100);
            ok = ok && pts[1].accuracy < pts[0].accuracy;
            detail += fmt("%s %.3f->%.3f; ", cell.name.c_str(), pts[0].accuracy, pts[1].accuracy);
        }
        return Outcome{ok, detail + "acc(0.030) < acc(0.001) for every seed-0 model"};
    });

    report.run("8", "saliency sparsity scs > conv", [&] {
        std::vector<double> scs_med, conv_med;
        for (std::size_t seed = 0; seed < s.seeds; ++seed) {
            auto& scs_model = *models["scs/none"][seed];
            auto& conv_model = *models["conv/relu"][seed];
            std::vector<double> g_scs, g_conv;
            for (std::size_t i = 0; i < te.size() && g_scs.size() < s.saliency; ++i) {
                const std::vector<std::size_t> one{i};
                const Tensor img = te.batch(one);
                const int label = te.labels[i];
                auto predict = [&](zoo::Model& m) {
                    NoGradGuard g;
                    m.set_training(false);
                    const auto v = m.forward(img).to_vector();
                    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
                };
                if (predict(scs_model) != label || predict(conv_model) != label) continue;
                g_scs.push_back(analysis::sparsity_index(analysis::saliency_map(scs_model, img, label)));
                g_conv.push_back(analysis::sparsity_index(analysis::saliency_map(conv_model, img, label)));
            }
            if (g_scs.size() < s.saliency)
                return Outcome{false, fmt("seed %zu: only %zu test images correct under both models", seed,
                                          g_scs.size())};
            scs_med.push_back(median(g_scs));
            conv_med.push_back(median(g_conv));
        }
        const double a = median(scs_med), b = median(conv_med);
        return Outcome{a > b, fmt("%zu images correct under both, 3-seed median Gini: scs %.4f vs conv %.4f "
                                  "(stochastic criterion)",
                                  s.saliency, a, b)};
    });
    return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scs acceptance criteria"};
    std::string suite = "core";
    std::string cifar_dir;
    bool smoke = false;
    std::vector<std::string> only;
    app.add_option("--suite", suite)->check(CLI::IsMember({"core", "cifar"}));
    app.add_option("--cifar-dir", cifar_dir, "CIFAR-10 binary directory (default: $SCS_CIFAR10_DIR)");
    app.add_flag("--smoke", smoke, "cifar suite at toy scale to exercise the code path; verdicts are not meaningful");
    app.add_option("--only", only, "core suite: run just these criterion ids (7a also runs 6)");
    CLI11_PARSE(app, argc, argv);
    if (cifar_dir.empty()) {
        if (const char* env = std::getenv("SCS_CIFAR10_DIR")) cifar_dir = env;
    }

    Report report(suite == "cifar" && smoke);  // smoke never softens the core suite
    if (suite == "cifar") {
        if (cifar_dir.empty() || !fs::is_directory(cifar_dir)) {
            const char* why = "BLOCKED (no CIFAR-10 directory: set SCS_CIFAR10_DIR or --cifar-dir)";
            std::printf("SKIP  5    desk-scale directional accuracy    %s\n", why);
            std::printf("SKIP  7b   PGD endpoints on trained models    %s\n", why);
            std::printf("SKIP  8    saliency sparsity scs > conv       %s\n", why);
            return kSkipExit;
        }
        Scale scale;
        if (smoke) scale = {200, 100, 2, 50, 3, 50, 5};
        return cifar_suite(cifar_dir, scale, smoke, report);
    }

    std::optional<fs::path> cifar;
    if (!cifar_dir.empty() && fs::is_directory(cifar_dir)) cifar = cifar_dir;

    auto want = [&](const std::string& id) {
        if (only.empty()) return true;
        auto has = [&](const char* x) { return std::find(only.begin(), only.end(), x) != only.end(); };
        return has(id.c_str()) || (id == "6" && has("7a"));
    };
    if (want("1")) report.run("1", "gradient audit", gradient_audit);
    if (want("2")) report.run("2", "reduction identities", reduction_identities);
    if (want("3")) report.run("3", "boundedness and scale invariance", boundedness_and_scale);
    if (want("4")) report.run("4", "1-D detector demo", detector_demo);

    std::string source;
    std::vector<OverfitRun> runs;
    if (want("6")) {
        const data::Dataset overfit_set = overfit_subset(cifar, source);
        report.run("6", "overfit oracle", [&] { return overfit(overfit_set, source, runs); });
        if (want("7a")) report.run("7a", "PGD contract", [&] { return pgd_contract(runs, overfit_set); });
    }
    if (want("9")) report.run("9", "telemetry completeness", telemetry_completeness);
    if (want("10")) report.run("10", "determinism", determinism);
    return report.all_pass() ? 0 : 1;
}

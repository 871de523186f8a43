#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "run_config.hpp"
#include "scs/errors.hpp"

namespace scsnet {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

TEST(RunConfig, DefaultsResolveSeedReferences) {
    RunConfig c;
    c.set("seed", "7");
    EXPECT_EQ(c.integer("data.seed"), 7u);
    EXPECT_EQ(c.integer_list("grid.seeds"), (std::vector<std::uint64_t>{7}));
    c.set("grid.seeds", "1,2");
    EXPECT_EQ(c.integer_list("grid.seeds"), (std::vector<std::uint64_t>{1, 2}));
    EXPECT_EQ(c.real_list("attack.epsilons").size(), 8u);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
    RunConfig c;
    try {
        c.set("train.epochz", "3");
        FAIL() << "expected ConfigError";
    } catch (const scs::ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("train.epochz"), std::string::npos);
    }
    EXPECT_THROW(c.set("train.epochs", "-1"), scs::ConfigError);
    EXPECT_THROW(c.set("train.max_lr", "fast"), scs::ConfigError);
    EXPECT_THROW(c.set("aug.enabled", "yes"), scs::ConfigError);
    EXPECT_THROW(c.set("grid.layer", "scs,,conv"), scs::ConfigError);
    EXPECT_THROW(c.apply_override("train.epochs"), scs::ConfigError);
    EXPECT_NO_THROW(c.apply_override("train.epochs = 3"));
    EXPECT_EQ(c.integer("train.epochs"), 3u);
}

TEST(RunConfig, FileErrorsNameTheLine) {
    const auto path = fs::temp_directory_path() / "scs_cli_dup.cfg";
    std::ofstream(path) << "# comment\ntrain.epochs = 2\n\ntrain.epochs = 3\n";
    RunConfig c;
    try {
        c.load_file(path);
        FAIL() << "expected ConfigError";
    } catch (const scs::ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(":4"), std::string::npos) << e.what();
    }
}

TEST(RunConfig, SnapshotRoundTrips) {
    RunConfig c;
    c.set("seed", "3");
    c.set("grid.layer", "conv, scs");
    c.set("train.max_lr", "0.1");
    const auto path = fs::temp_directory_path() / "scs_cli_snapshot.cfg";
    std::ofstream(path) << c.snapshot();
    RunConfig back;
    back.load_file(path);
    EXPECT_EQ(back.snapshot(), c.snapshot());
    EXPECT_EQ(back.real_list("attack.epsilons"), c.real_list("attack.epsilons"));
}

TEST(RunConfig, FormatRealRoundTrips) {
    for (double v : {0.1, 1e-8, 0.0016256135928, 1.0 / 3.0, 30.0}) EXPECT_EQ(std::stod(format_real(v)), v);
}

/// Runs the scsnet binary in a scratch directory.
class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("scs_cli_" + std::string(info->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }

    int run(const std::string& args, std::string* output = nullptr) {
        const std::string cmd =
            "cd '" + dir_.string() + "' && '" SCSNET_BIN "' " + args + " > out.log 2>&1";
        const int st = std::system(cmd.c_str());
        if (output) *output = slurp(dir_ / "out.log");
        return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    }

    static std::string tiny_data() {
        return "--override data.source=synthetic --override data.train_size=64 --override data.test_size=20 "
               "--override grid.family=rohrer_small --override train.batch_size=32 ";
    }

    fs::path dir_;
};

TEST_F(Cli, TwoCellGridWritesTwoSummaryRows) {
    ASSERT_EQ(run("train --out r " + tiny_data() + "--override train.epochs=1 --override grid.layer=scs,conv"), 0);
    const auto rows = read_csv(dir_ / "r/summary.csv");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0][10], "best_test_acc");
    EXPECT_EQ(rows[1][1], "scs");
    EXPECT_EQ(rows[2][1], "conv");
    for (const char* f : {"telemetry.csv", "initial.ckpt", "final.ckpt", "best.ckpt", "config.resolved"})
        EXPECT_TRUE(fs::exists(dir_ / "r/rohrer_small-conv-none-maxpool-none-p_learned-s0" / f)) << f;
    EXPECT_TRUE(fs::exists(dir_ / "r/config.resolved"));
}

TEST_F(Cli, RerunReproducesTelemetry) {
    const std::string args = tiny_data() + "--override train.epochs=2 --seed 4";
    ASSERT_EQ(run("train --out a " + args), 0);
    ASSERT_EQ(run("train --out b " + args), 0);
    auto a = read_csv(dir_ / "a/rohrer_small-scs-none-maxpool-none-p_learned-s4/telemetry.csv");
    auto b = read_csv(dir_ / "b/rohrer_small-scs-none-maxpool-none-p_learned-s4/telemetry.csv");
    ASSERT_EQ(a.size(), 3u);
    // wall-clock columns are the only ones allowed to differ
    for (auto* t : {&a, &b})
        for (std::size_t r = 1; r < t->size(); ++r) (*t)[r][5] = (*t)[r][6] = "*";
    EXPECT_EQ(a, b);
}

TEST_F(Cli, SnapshotReproducesCell) {
    ASSERT_EQ(run("train --out a " + tiny_data() + "--override train.epochs=1 --override grid.layer=cossim,sdp"), 0);
    const auto cell = "rohrer_small-sdp-none-maxpool-none-p_learned-s0";
    ASSERT_EQ(run(std::string("train --out b --config a/") + cell + "/config.resolved"), 0);
    EXPECT_EQ(slurp(dir_ / "a" / cell / "initial.ckpt"), slurp(dir_ / "b" / cell / "initial.ckpt"));
    EXPECT_EQ(slurp(dir_ / "a" / cell / "final.ckpt"), slurp(dir_ / "b" / cell / "final.ckpt"));
    EXPECT_EQ(read_csv(dir_ / "b/summary.csv").size(), 2u);
}

TEST_F(Cli, ParallelJobsMatchSerialRun) {
    const std::string args = tiny_data() + "--override train.epochs=1 --override grid.layer=scs,conv,cossim";
    ASSERT_EQ(run("train --out s " + args), 0);
    ASSERT_EQ(run("train --out p --jobs 3 " + args), 0);
    auto s = read_csv(dir_ / "s/summary.csv");
    auto p = read_csv(dir_ / "p/summary.csv");
    ASSERT_EQ(s.size(), 4u);
    ASSERT_EQ(p.size(), 4u);
    for (std::size_t r = 1; r < 4; ++r) {
        s[r].resize(11);
        p[r].resize(11);
        EXPECT_EQ(s[r], p[r]);
    }
    EXPECT_EQ(slurp(dir_ / "s/rohrer_small-cossim-none-maxpool-none-p_learned-s0/final.ckpt"),
              slurp(dir_ / "p/rohrer_small-cossim-none-maxpool-none-p_learned-s0/final.ckpt"));
    for (const auto& e : fs::directory_iterator(dir_ / "p")) EXPECT_NE(e.path().extension(), ".row");
}

TEST_F(Cli, ZeroEpochsGiveNullAccuracy) {
    ASSERT_EQ(run("train --out r " + tiny_data() + "--override train.epochs=0"), 0);
    const auto rows = read_csv(dir_ / "r/summary.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][10], "null");
    EXPECT_EQ(rows[1][11], "null");
    EXPECT_EQ(rows[1][12], "null");
}

TEST_F(Cli, RefusesToClobberWithoutForce) {
    const std::string args = "train --out r " + tiny_data() + "--override train.epochs=0";
    ASSERT_EQ(run(args), 0);
    const std::string before = slurp(dir_ / "r/summary.csv");
    std::string log;
    EXPECT_EQ(run(args, &log), kConfigError);
    EXPECT_NE(log.find("--force"), std::string::npos);
    EXPECT_EQ(run(args + " --force"), 0);
    EXPECT_EQ(slurp(dir_ / "r/summary.csv"), before);
}

TEST_F(Cli, ConfigAndDataErrors) {
    std::string log;
    EXPECT_EQ(run("train --out r --override train.nope=1", &log), kConfigError);
    EXPECT_NE(log.find("train.nope"), std::string::npos);
    EXPECT_EQ(run("train --out r --override grid.layer=conv,fancy", &log), kConfigError);
    EXPECT_NE(log.find("grid.layer"), std::string::npos);
    EXPECT_EQ(run("train --out r --data-dir does/not/exist"), kDataError);
    EXPECT_EQ(run("train --out r"), kDataError);
    EXPECT_EQ(run("frobnicate"), kConfigError);
    EXPECT_FALSE(fs::exists(dir_ / "r"));
}

TEST_F(Cli, DivergentTrainingIsNumericError) {
    std::string log;
    EXPECT_EQ(run("train --out r " + tiny_data() +
                      "--override grid.layer=sdp --override train.epochs=2 --override train.max_lr=1e300 "
                      "--override train.div_factor=1",
                  &log),
              kNumericError);
    EXPECT_NE(log.find("diverged"), std::string::npos) << log;
}

class CliWithCheckpoint : public Cli {
  protected:
    void SetUp() override {
        Cli::SetUp();
        ASSERT_EQ(run("train --out r " + tiny_data() + "--override train.epochs=1"), 0);
        ckpt_ = "r/rohrer_small-scs-none-maxpool-none-p_learned-s0/best.ckpt";
    }
    std::string ckpt_;
};

TEST_F(CliWithCheckpoint, ZeroEpsilonRowEqualsCleanAccuracy) {
    ASSERT_EQ(run("eval --checkpoint " + ckpt_ + " --out e " + tiny_data()), 0);
    ASSERT_EQ(run("attack --checkpoint " + ckpt_ + " --out a " + tiny_data() + "--override attack.epsilons=0"), 0);
    const auto ev = read_csv(dir_ / "e/eval.csv");
    const auto sweep = read_csv(dir_ / "a/robustness.csv");
    ASSERT_EQ(sweep.size(), 2u);
    EXPECT_EQ(sweep[0], (std::vector<std::string>{"epsilon", "accuracy", "n_eval"}));
    EXPECT_EQ(std::stod(sweep[1][1]), std::stod(ev[1][1]));
    EXPECT_EQ(sweep[1][2], "20");
}

TEST_F(CliWithCheckpoint, DefaultSweepHasEightIncreasingEpsilons) {
    ASSERT_EQ(run("attack --checkpoint " + ckpt_ + " --out a " + tiny_data() + "--override attack.steps=2"), 0);
    const auto sweep = read_csv(dir_ / "a/robustness.csv");
    ASSERT_EQ(sweep.size(), 9u);
    for (std::size_t r = 2; r < sweep.size(); ++r) EXPECT_GT(std::stod(sweep[r][0]), std::stod(sweep[r - 1][0]));
    EXPECT_DOUBLE_EQ(std::stod(sweep[1][0]), 0.001);
    EXPECT_DOUBLE_EQ(std::stod(sweep[8][0]), 0.03);
}

TEST_F(CliWithCheckpoint, CorruptCheckpointLeavesNoOutput) {
    std::string bytes = slurp(dir_ / ckpt_);
    bytes[0] = 'Z';
    std::ofstream(dir_ / "bad.ckpt", std::ios::binary) << bytes;
    EXPECT_EQ(run("attack --checkpoint bad.ckpt --out a " + tiny_data()), kCheckpointError);
    EXPECT_FALSE(fs::exists(dir_ / "a"));
    EXPECT_EQ(run("saliency --checkpoint bad.ckpt --out s " + tiny_data()), kCheckpointError);
    EXPECT_FALSE(fs::exists(dir_ / "s"));
    EXPECT_EQ(run("eval --checkpoint missing.ckpt " + tiny_data()), kCheckpointError);
}

TEST_F(CliWithCheckpoint, SaliencyWritesOneMapAndSidecarPerIndex) {
    ASSERT_EQ(run("saliency --checkpoint " + ckpt_ + " --out s --indices 2,5,11 " + tiny_data()), 0);
    std::size_t pgm = 0, txt = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "s")) {
        pgm += e.path().extension() == ".pgm";
        txt += e.path().extension() == ".txt";
    }
    EXPECT_EQ(pgm, 3u);
    EXPECT_EQ(txt, 3u);
    EXPECT_EQ(slurp(dir_ / "s/saliency_5.pgm").rfind("P5\n32 32\n255\n", 0), 0u);
    EXPECT_NE(slurp(dir_ / "s/saliency_11.txt").find("image=11"), std::string::npos);
    EXPECT_EQ(run("saliency --checkpoint " + ckpt_ + " --out t --indices 20 " + tiny_data()), kConfigError);
}

TEST_F(Cli, GradcheckExitReflectsThreshold) {
    std::string log;
    ASSERT_EQ(run("gradcheck --out g --override gradcheck.instances=3", &log), 0) << log;
    const auto rows = read_csv(dir_ / "g/gradcheck.csv");
    std::vector<std::string> layers;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (std::find(layers.begin(), layers.end(), rows[r][0]) == layers.end()) layers.push_back(rows[r][0]);
        EXPECT_EQ(rows[r][5], "true");
    }
    EXPECT_EQ(layers.size(), 10u);
    EXPECT_EQ(run("gradcheck --override gradcheck.instances=1 --override gradcheck.threshold=1e-300"), kFailed);
    EXPECT_EQ(run("gradcheck --override gradcheck.layers=conv3d"), kConfigError);
}

TEST_F(Cli, Demo1dPeaksAtTemplate) {
    ASSERT_EQ(run("demo1d --out d --seed 5"), 0);
    const auto rows = read_csv(dir_ / "d/demo1d.csv");
    ASSERT_EQ(rows.size(), 58u);
    std::size_t truth = 0, best = 1;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r][3] == "1") truth = r;
        if (std::stod(rows[r][2]) > std::stod(rows[best][2])) best = r;
    }
    ASSERT_NE(truth, 0u);
    EXPECT_EQ(best, truth);
    EXPECT_NEAR(std::stod(rows[truth][2]), 1.0, 1e-6);
    EXPECT_EQ(read_csv(dir_ / "d/signal.csv").size(), 65u);

    const std::string first = slurp(dir_ / "d/demo1d.csv");
    EXPECT_EQ(run("demo1d --out d --seed 5"), kConfigError);
    ASSERT_EQ(run("demo1d --out d --seed 5 --force"), 0);
    EXPECT_EQ(slurp(dir_ / "d/demo1d.csv"), first);
}

}  // namespace
}  // namespace scsnet

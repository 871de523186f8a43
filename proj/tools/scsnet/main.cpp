#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

struct Flags {
    std::string config;
    std::string data_dir;
    std::string out;
    std::string checkpoint;
    std::string indices;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    bool force = false;
    std::vector<std::string> overrides;
};

/// File first, then dedicated flags, then --override in the order given.
scsnet::Invocation resolve(const Flags& f) {
    scsnet::Invocation inv;
    if (!f.config.empty()) inv.config.load_file(f.config);
    if (f.seed) inv.config.set("seed", std::to_string(*f.seed));
    if (!f.data_dir.empty()) inv.config.set("data.dir", f.data_dir);
    if (!f.checkpoint.empty()) inv.config.set("checkpoint", f.checkpoint);
    if (!f.indices.empty()) inv.config.set("saliency.indices", f.indices);
    for (const auto& o : f.overrides) inv.config.apply_override(o);
    if (!f.out.empty()) inv.out = f.out;
    inv.force = f.force;
    inv.jobs = f.jobs;
    return inv;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scsnet: train, attack and inspect sharpened cosine similarity networks"};
    app.require_subcommand(1);
    app.fallthrough();

    Flags flags;
    app.add_option("--config", flags.config, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--data-dir", flags.data_dir, "directory with the CIFAR-10 binary batches (sets data.dir)");
    app.add_option("--out", flags.out, "output directory");
    app.add_option("--seed", flags.seed, "top-level seed (sets seed)");
    app.add_option("--jobs", flags.jobs, "parallel worker processes for grid cells")->check(CLI::PositiveNumber);
    app.add_flag("--force", flags.force, "overwrite existing artifacts");
    app.add_option("--override", flags.overrides, "key=value, applied last; repeatable")
        ->allow_extra_args(false)
        ->take_all();

    using Command = std::function<int(const scsnet::Invocation&)>;
    std::map<CLI::App*, Command> commands;
    auto add = [&](const char* name, const char* help, Command fn) {
        CLI::App* sub = app.add_subcommand(name, help);
        commands[sub] = std::move(fn);
        return sub;
    };
    add("train", "train every cell of the variant grid", scsnet::cmd_train);
    add("eval", "evaluate a checkpoint on the test split", scsnet::cmd_eval)
        ->add_option("--checkpoint", flags.checkpoint, "model checkpoint");
    add("attack", "PGD robustness sweep of a checkpoint", scsnet::cmd_attack)
        ->add_option("--checkpoint", flags.checkpoint, "model checkpoint");
    auto* sal = add("saliency", "vanilla-gradient saliency maps for test images", scsnet::cmd_saliency);
    sal->add_option("--checkpoint", flags.checkpoint, "model checkpoint");
    sal->add_option("--indices", flags.indices, "comma-separated test image indices (sets saliency.indices)");
    add("gradcheck", "finite-difference audit of every layer backward pass", scsnet::cmd_gradcheck);
    add("demo1d", "1-D template detector responses, conv vs scs", scsnet::cmd_demo1d);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : scsnet::kConfigError;
    }

    CLI::App* chosen = app.get_subcommands().front();
    try {
        return commands.at(chosen)(resolve(flags));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "scsnet %s: %s\n", chosen->get_name().c_str(), e.what());
        return scsnet::exit_code_for(e);
    }
}

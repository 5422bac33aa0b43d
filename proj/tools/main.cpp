// seqscreen command line: ingest quarterly fundamentals, train the
// sequence models, compare them, and rank stocks by predicted earning
// yield.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "seqscreen/pipeline.hpp"

namespace {

struct FlagOverrides {
    std::string config;
    std::string data;
    std::string model_file;
    std::string out;
    std::string model;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool emit_loss = false;
};

void add_common_flags(CLI::App* cmd, FlagOverrides& flags) {
    cmd->add_option("--config", flags.config, "Configuration file (key = value sections)");
    cmd->add_option("--seed", flags.seed, "Random seed")->each([&](const std::string&) {
        flags.seed_given = true;
    });
    cmd->add_option("--out", flags.out, "Output directory for all artifacts");
    cmd->add_option("--model", flags.model, "Model kind")
        ->check(CLI::IsMember({"fnn", "lstm", "gru"}));
}

int dispatch(const std::string& command, const FlagOverrides& flags) {
    seqscreen::RunConfig cfg;
    try {
        cfg = flags.config.empty() ? seqscreen::default_config()
                                   : seqscreen::parse_config(flags.config);
        if (!flags.data.empty()) cfg.input = flags.data;
        if (!flags.model_file.empty()) cfg.model_file = flags.model_file;
        if (!flags.out.empty()) cfg.out = flags.out;
        if (!flags.model.empty()) cfg.model = seqscreen::model_kind_from_string(flags.model);
        if (flags.seed_given) cfg.hp.seed = flags.seed;
        if (flags.emit_loss) cfg.emit_epoch_loss = true;
    } catch (const std::exception& e) {
        std::cerr << "error: " << command << ": " << e.what() << '\n';
        return 1;
    }
    return seqscreen::run_command(command, cfg);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sequence-model screening of stocks by forecast earning yield (EBIT/EV)"};
    app.require_subcommand(1);

    FlagOverrides flags;

    auto* prepare = app.add_subcommand(
        "prepare", "Ingest, filter, window and standardize the dataset, then persist it");
    prepare->add_option("--data", flags.data, "Input fundamentals CSV");

    auto* train = app.add_subcommand("train", "Train one model kind and report its test MAPE");
    train->add_option("--data", flags.data, "Input fundamentals CSV");
    train->add_flag("--emit-loss", flags.emit_loss, "Write the per-epoch loss series as CSV");

    auto* compare = app.add_subcommand(
        "compare", "Train FNN, LSTM and GRU on the same split and emit a comparison report");
    compare->add_option("--data", flags.data, "Input fundamentals CSV");
    compare->add_flag("--emit-loss", flags.emit_loss, "Write per-epoch loss series as CSV");

    auto* gridsearch = app.add_subcommand(
        "gridsearch", "Exhaustively evaluate every hyperparameter combination in the grid");
    gridsearch->add_option("--data", flags.data, "Input fundamentals CSV");

    auto* rank = app.add_subcommand(
        "rank", "Rank companies by predicted next-quarter EBIT/EV using a trained model");
    rank->add_option("--data", flags.data, "Input fundamentals CSV");
    rank->add_option("--model-file", flags.model_file, "Trained model file");

    auto* gradcheck = app.add_subcommand(
        "gradcheck", "Verify analytic gradients against central differences for all model kinds");

    auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark dataset CSV");

    for (CLI::App* cmd : {prepare, train, compare, gridsearch, rank, gradcheck, synth}) {
        add_common_flags(cmd, flags);
    }

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    return dispatch(command, flags);
}

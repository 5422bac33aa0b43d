#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "seqscreen/synth.hpp"
#include "seqscreen/training.hpp"

namespace seqscreen {

// Everything a run needs, with a default for every field. Populated
// from an INI-style key = value config file, then overridden by command
// line flags. Unknown keys or sections are rejected.
struct RunConfig {
    // [paths]
    std::string input;               // data CSV
    std::string model_file;          // trained model, consumed by rank
    std::string scaler_file;         // feature scaler, consumed by rank
    std::string out = "out";         // all artifacts land below this

    // [universe]
    std::size_t top_n = 3000;
    std::vector<std::string> excluded_sectors = {"financials"};

    // [train]
    ModelKind model = ModelKind::Lstm;
    Hyperparameters hp;
    double split_ratio = 0.8;
    bool emit_epoch_loss = false;

    // [grid]
    GridSpace grid;                  // defaults to hidden_neurons x learning_rate, 3 x 3

    // [synth]
    SynthConfig synth;
};

RunConfig default_config();

// Parses a config file into a RunConfig, starting from the defaults.
RunConfig parse_config(const std::filesystem::path& path);

// Executes one subcommand: prepare, train, compare, gridsearch, rank,
// gradcheck or synth. Returns the process exit status; on failure a
// single machine-parsable "error: ..." line goes to stderr. Artifacts
// are written only under cfg.out.
int run_command(const std::string& command, const RunConfig& cfg);

} // namespace seqscreen

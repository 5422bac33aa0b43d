#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "seqscreen/datapipe.hpp"

namespace seqscreen {

// Synthetic fundamentals benchmark. Each company carries a latent AR(1)
// state; the 14 ratio features are noisy linear readouts of the current
// state, and the EBIT/EV ratio is a fixed linear function of the last
// two states. Recovering the state requires pooling observations across
// quarters, which is what gives the recurrent models their edge over
// the flattened baseline.
struct SynthConfig {
    std::size_t companies = 200;
    std::size_t quarters = 40;
    std::uint64_t seed = 1;
    int start_year = 2000;
};

std::vector<QuarterlyRecord> synth_records(const SynthConfig& cfg);

// Writes records as an ingestion-schema CSV.
void write_records_csv(const std::filesystem::path& path,
                       const std::vector<QuarterlyRecord>& records);

} // namespace seqscreen

#include "seqscreen/synth.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "seqscreen/rng.hpp"
#include "textio.hpp"

namespace seqscreen {

namespace {

// Latent state dynamics: a fast and a slow AR(1) component, each with
// stationary variance 1. The slow component can only be pinned down by
// pooling readouts across the whole window.
constexpr double kLatentRho = 0.85;
constexpr double kSlowRho = 0.98;

// The per-company latent state is the pair (level s_t, reporting
// regime r_t). EBIT/EV at quarter t is a fixed linear function of the
// two previous states plus a small disturbance. The offset keeps
// targets away from zero so percentage errors stay well defined; the
// opposing level signs make the target sensitive to the latent
// trajectory, not just its position.
constexpr double kEbitBase = 0.16;
constexpr double kEbitLoadPrev = 0.03;
constexpr double kEbitLoadPrev2 = -0.015;
constexpr double kEbitSlow = 0.06;
constexpr double kEbitRegime = 0.09;
constexpr double kEbitNoise = 0.004;

// Reporting-quality regime: quarters flip between calm and noisy
// observation noise with weakly persistent Markov transitions, so the
// regime has to be read from each quarter's own dispersion rather than
// copied forward. The regime itself carries earnings information.
constexpr double kStayCalm = 0.75;
constexpr double kStayNoisy = 0.55;
constexpr double kNoisyScale = 12.0;

// The other 13 ratio features are noisy readouts of the current latent
// state, half of them through a saturating response. A single quarter
// pins the state poorly; the whole window pins it well.
struct FeatureModel {
    double base;
    double load;
    double slow_load;
    double noise;
    bool saturating;
};

constexpr FeatureModel kFeatureModels[kFeatureCount] = {
    {0.58, 0.120, 0.060, 0.040, false},  // revenue
    {0.29, 0.100, -0.054, 0.040, true},  // cogs
    {0.19, 0.090, 0.066, 0.040, false},  // sga
    {0.00, 0.000, 0.000, 0.000, false},  // ebit, generated from the latent recurrence
    {0.03, 0.105, -0.060, 0.040, true},  // net_income
    {0.22, 0.115, 0.054, 0.040, false},  // cash_and_equivalents
    {0.10, 0.095, -0.066, 0.040, true},  // accounts_receivable
    {0.12, -0.110, 0.060, 0.040, false}, // inventory
    {0.45, -0.100, -0.048, 0.040, true}, // ppe
    {0.06, 0.090, 0.072, 0.040, false},  // oca
    {0.08, -0.105, -0.054, 0.040, true}, // debt_in_current_liabilities
    {0.07, 0.110, 0.048, 0.040, false},  // accounts_payable
    {0.09, -0.095, -0.072, 0.040, true}, // other_current_liabilities
    {0.45, -0.120, 0.066, 0.040, false}, // total_liabilities
};

double readout(const FeatureModel& fm, double s, double slow) {
    return fm.load * (fm.saturating ? 1.2 * std::tanh(1.3 * s) : s) + fm.slow_load * slow;
}

const char* kSectors[] = {"technology", "industrials", "healthcare", "consumer_staples",
                          "energy",     "utilities",   "materials"};

} // namespace

std::vector<QuarterlyRecord> synth_records(const SynthConfig& cfg) {
    if (cfg.companies == 0 || cfg.quarters == 0) {
        throw std::invalid_argument("synth: companies and quarters must be at least 1");
    }

    SeededRng rng(derive_seed(cfg.seed, "synth"));
    const double innovation = std::sqrt(1.0 - kLatentRho * kLatentRho);

    std::vector<QuarterlyRecord> records;
    records.reserve(cfg.companies * cfg.quarters);

    for (std::size_t c = 0; c < cfg.companies; ++c) {
        char id[16];
        std::snprintf(id, sizeof id, "SYN%04zu", c + 1);
        const char* sector = kSectors[c % std::size(kSectors)];
        const double ev_base = std::exp(rng.uniform(std::log(1e8), std::log(5e10)));

        // two warm-up latent steps so the first quarter's EBIT has a
        // well-defined history
        double s_prev2 = rng.next_gaussian();
        double s_prev = kLatentRho * s_prev2 + innovation * rng.next_gaussian();
        double s = kLatentRho * s_prev + innovation * rng.next_gaussian();
        const double slow_innovation = std::sqrt(1.0 - kSlowRho * kSlowRho);
        double slow_prev = rng.next_gaussian();
        double slow = kSlowRho * slow_prev + slow_innovation * rng.next_gaussian();
        const auto step_regime = [&](bool current) {
            const double stay = current ? kStayNoisy : kStayCalm;
            return rng.next_unit() < stay ? current : !current;
        };
        // stationary start: calm with probability (1-stay_noisy) /
        // ((1-stay_calm) + (1-stay_noisy))
        bool noisy_prev = rng.next_unit() < (1.0 - kStayCalm) / (2.0 - kStayCalm - kStayNoisy);
        bool noisy = step_regime(noisy_prev);

        Period period{cfg.start_year, 1};
        for (std::size_t q = 0; q < cfg.quarters; ++q) {
            QuarterlyRecord rec;
            rec.company_id = id;
            rec.sector = sector;
            rec.period = period;
            rec.ev = ev_base * std::exp(0.02 * rng.next_gaussian());
            rec.market_cap = 0.75 * rec.ev;

            const double noise_scale = noisy ? kNoisyScale : 1.0;
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                if (f == kEbitIndex) continue;
                const FeatureModel& fm = kFeatureModels[f];
                const double ratio = fm.base + readout(fm, s, slow) +
                                     fm.noise * noise_scale * rng.next_gaussian();
                rec.fundamentals[f] = ratio * rec.ev;
            }
            const double ebit_ratio = kEbitBase + kEbitLoadPrev * s_prev +
                                      kEbitLoadPrev2 * s_prev2 + kEbitSlow * slow_prev +
                                      kEbitRegime * (noisy_prev ? 1.0 : 0.0) +
                                      kEbitNoise * rng.next_gaussian();
            rec.fundamentals[kEbitIndex] = ebit_ratio * rec.ev;

            records.push_back(std::move(rec));

            s_prev2 = s_prev;
            s_prev = s;
            s = kLatentRho * s + innovation * rng.next_gaussian();
            slow_prev = slow;
            slow = kSlowRho * slow + slow_innovation * rng.next_gaussian();
            noisy_prev = noisy;
            noisy = step_regime(noisy);
            period = next_period(period);
        }
    }
    return records;
}

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<QuarterlyRecord>& records) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write CSV: " + path.string());
    os << csv_header() << '\n';
    for (const auto& rec : records) {
        os << rec.company_id << ',' << rec.sector << ',' << format_period(rec.period) << ','
           << textio::format_g17(rec.market_cap) << ',' << textio::format_g17(rec.ev);
        for (const double v : rec.fundamentals) os << ',' << textio::format_g17(v);
        os << '\n';
    }
    if (!os) throw std::runtime_error("failed writing CSV: " + path.string());
}

} // namespace seqscreen

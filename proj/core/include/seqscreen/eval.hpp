#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqscreen/backprop.hpp"
#include "seqscreen/datapipe.hpp"
#include "seqscreen/network.hpp"
#include "seqscreen/training.hpp"

namespace seqscreen {

struct EvaluationReport {
    ModelKind model = ModelKind::Fnn;
    std::size_t scored = 0;       // samples entering the mean
    double mape_percent = 0.0;
    std::size_t excluded = 0;     // skipped by the near-zero-actual guard
};

// Mean absolute percentage error, (1/m) * sum |A - F| / |A| * 100.
// Samples with |actual| < 1e-8 are excluded from the mean and counted;
// if nothing remains scorable that is an error.
EvaluationReport mape(std::span<const double> forecast, std::span<const double> actual);

// Forecasts every sample with the network and scores MAPE against the
// raw targets.
EvaluationReport evaluate_model(const Network& net, const std::vector<SequenceSample>& samples);

// Rows sorted by MAPE ascending (ties by model name); the first row is
// the best model.
std::vector<EvaluationReport> compare_models(std::vector<EvaluationReport> reports);

struct RankedStock {
    std::string company_id;
    double predicted_ebit_ev = 0.0;
};

struct StockRanking {
    std::vector<RankedStock> entries; // prediction descending, id ascending on ties
};

StockRanking make_ranking(std::vector<RankedStock> entries);

// Predicts next-quarter EBIT/EV for each company's latest window
// (EV-normalized; the training-time scaler is applied here) and ranks
// descending.
StockRanking rank_stocks(const Network& net, const FeatureScaler& scaler,
                         const std::vector<std::pair<std::string, Matrix>>& latest);

// Report writers. Everything is derived from deterministic state, so
// identical inputs produce byte-identical files.
void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<EvaluationReport>& sorted);
void write_comparison_text(const std::filesystem::path& path,
                           const std::vector<EvaluationReport>& sorted);
void write_ranking_csv(const std::filesystem::path& path, const StockRanking& ranking);
void write_ranking_text(const std::filesystem::path& path, const StockRanking& ranking,
                        const std::vector<std::string>& omitted);
void write_history_csv(const std::filesystem::path& path, const TrainingHistory& history);

} // namespace seqscreen

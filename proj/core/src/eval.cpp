#include "seqscreen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "textio.hpp"

namespace seqscreen {

namespace {
constexpr double kZeroActualGuard = 1e-8;
} // namespace

EvaluationReport mape(std::span<const double> forecast, std::span<const double> actual) {
    if (forecast.empty() || actual.empty()) throw std::invalid_argument("mape: empty input");
    if (forecast.size() != actual.size()) {
        throw std::invalid_argument("mape: length mismatch, " + std::to_string(forecast.size()) +
                                    " vs " + std::to_string(actual.size()));
    }
    EvaluationReport report;
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (std::abs(actual[i]) < kZeroActualGuard) {
            ++report.excluded;
            continue;
        }
        sum += std::abs(actual[i] - forecast[i]) / std::abs(actual[i]);
        ++report.scored;
    }
    if (report.scored == 0) throw std::runtime_error("mape: no scorable samples");
    report.mape_percent = sum / static_cast<double>(report.scored) * 100.0;
    return report;
}

EvaluationReport evaluate_model(const Network& net, const std::vector<SequenceSample>& samples) {
    std::vector<double> forecast;
    std::vector<double> actual;
    forecast.reserve(samples.size());
    actual.reserve(samples.size());
    ForwardTrace trace;
    for (const auto& s : samples) {
        forward_trace(net, s.window, trace);
        forecast.push_back(trace.prediction);
        actual.push_back(s.target);
    }
    EvaluationReport report = mape(forecast, actual);
    report.model = net.kind;
    return report;
}

std::vector<EvaluationReport> compare_models(std::vector<EvaluationReport> reports) {
    if (reports.empty()) throw std::invalid_argument("compare_models: no reports");
    std::sort(reports.begin(), reports.end(), [](const EvaluationReport& a,
                                                 const EvaluationReport& b) {
        if (a.mape_percent != b.mape_percent) return a.mape_percent < b.mape_percent;
        return to_string(a.model) < to_string(b.model);
    });
    return reports;
}

StockRanking make_ranking(std::vector<RankedStock> entries) {
    std::sort(entries.begin(), entries.end(), [](const RankedStock& a, const RankedStock& b) {
        if (a.predicted_ebit_ev != b.predicted_ebit_ev) {
            return a.predicted_ebit_ev > b.predicted_ebit_ev;
        }
        return a.company_id < b.company_id;
    });
    return StockRanking{std::move(entries)};
}

StockRanking rank_stocks(const Network& net, const FeatureScaler& scaler,
                         const std::vector<std::pair<std::string, Matrix>>& latest) {
    std::vector<RankedStock> entries;
    entries.reserve(latest.size());
    for (const auto& [company, window] : latest) {
        const Matrix scaled = zscore_apply_window(scaler, window);
        entries.push_back({company, sequence_forward(net, scaled)});
    }
    return make_ranking(std::move(entries));
}

namespace {
std::string format_mape(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}
} // namespace

void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<EvaluationReport>& sorted) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write comparison: " + path.string());
    os << "model,mape_percent,scored,excluded\n";
    for (const auto& r : sorted) {
        os << to_string(r.model) << ',' << format_mape(r.mape_percent) << ',' << r.scored << ','
           << r.excluded << '\n';
    }
}

void write_comparison_text(const std::filesystem::path& path,
                           const std::vector<EvaluationReport>& sorted) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write comparison: " + path.string());
    os << "model   MAPE (%)      scored  excluded\n";
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& r = sorted[i];
        os << std::left << std::setw(8) << to_string(r.model) << std::right << std::setw(10)
           << format_mape(r.mape_percent) << std::setw(10) << r.scored << std::setw(10)
           << r.excluded;
        if (i == 0) os << "  <- best";
        os << '\n';
    }
}

void write_ranking_csv(const std::filesystem::path& path, const StockRanking& ranking) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write ranking: " + path.string());
    os << "rank,company_id,predicted_ebit_ev\n";
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        const auto& e = ranking.entries[i];
        os << (i + 1) << ',' << e.company_id << ',' << textio::format_g17(e.predicted_ebit_ev)
           << '\n';
    }
}

void write_ranking_text(const std::filesystem::path& path, const StockRanking& ranking,
                        const std::vector<std::string>& omitted) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write ranking: " + path.string());
    os << "rank  company                predicted EBIT/EV\n";
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        const auto& e = ranking.entries[i];
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", e.predicted_ebit_ev);
        os << std::left << std::setw(6) << (i + 1) << std::setw(23) << e.company_id << buf << '\n';
    }
    if (!omitted.empty()) {
        os << "\nomitted (insufficient consecutive history):\n";
        for (const auto& company : omitted) os << "  " << company << '\n';
    }
}

void write_history_csv(const std::filesystem::path& path, const TrainingHistory& history) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write history: " + path.string());
    os << "epoch,mean_abs_error\n";
    for (std::size_t i = 0; i < history.epoch_loss.size(); ++i) {
        os << (i + 1) << ',' << textio::format_g17(history.epoch_loss[i]) << '\n';
    }
}

} // namespace seqscreen

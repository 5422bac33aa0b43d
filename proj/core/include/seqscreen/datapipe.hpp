#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "seqscreen/matrix.hpp"

namespace seqscreen {

inline constexpr std::size_t kFeatureCount = 14;
inline constexpr std::size_t kWindowLen = 8;
inline constexpr std::size_t kEbitIndex = 3; // position of ebit in the feature list

// Feature columns, in CSV order.
extern const std::array<std::string_view, kFeatureCount> kFeatureNames;

// Exact expected header of an input CSV.
std::string csv_header();

// Calendar quarter. Successor arithmetic only, no dates are parsed.
struct Period {
    int year = 0;
    int quarter = 0; // 1..4

    auto operator<=>(const Period&) const = default;
};

Period next_period(Period p);
bool is_next_period(Period a, Period b); // b immediately follows a
std::optional<Period> parse_period(std::string_view text); // "YYYY-Qn"
std::string format_period(Period p);

// One company-quarter of raw fundamentals, in currency units, plus the
// enterprise value used to normalize them. ev == 0 never survives
// ingestion.
struct QuarterlyRecord {
    std::string company_id;
    std::string sector;
    Period period;
    double market_cap = 0.0;
    double ev = 0.0;
    std::array<double, kFeatureCount> fundamentals{};
};

struct RejectionReport {
    std::size_t bad_field_count = 0;
    std::size_t bad_period = 0;
    std::size_t non_numeric = 0;
    std::size_t zero_ev = 0;

    std::size_t total() const { return bad_field_count + bad_period + non_numeric + zero_ev; }
};

struct IngestResult {
    std::vector<QuarterlyRecord> records;
    RejectionReport rejected;
};

// Reads and validates an input CSV. A missing file or a header that
// does not match csv_header() is an error (reported with line/column
// positions); bad data rows are dropped and counted per reason.
IngestResult ingest_csv(const std::filesystem::path& path);

void write_rejection_report(const std::filesystem::path& path, const RejectionReport& report);

// Universe filter: drops excluded sectors (case-insensitive match),
// ranks the remaining companies by their most recent market cap and
// keeps the records of the top_n companies. The surviving records stay
// in input order; the ranking decides membership only.
std::vector<QuarterlyRecord> filter_universe(const std::vector<QuarterlyRecord>& records,
                                             std::size_t top_n,
                                             const std::set<std::string>& excluded_sectors);

// The 14 fundamentals divided by the record's own enterprise value.
std::array<double, kFeatureCount> ev_normalize(const QuarterlyRecord& r);

// One training row: an 8-quarter window of EV-normalized features
// (oldest first) and the EBIT/EV of the quarter right after it.
struct SequenceSample {
    std::string company_id;
    Matrix window; // kWindowLen x kFeatureCount
    double target = 0.0;
    Period target_period;
};

// Slides a stride-1 window over every maximal run of consecutive
// quarters: a run of N quarters yields max(0, N - window_len) samples.
// Windows never span a gap; companies without window_len + 1
// consecutive quarters contribute nothing.
std::vector<SequenceSample> build_windows(const std::vector<QuarterlyRecord>& records,
                                          std::size_t window_len = kWindowLen);

// Per-feature standardization statistics fitted on training windows.
struct FeatureScaler {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> stddev{};
};

// Population mean/stddev per feature over every timestep of the given
// windows. Standard deviations below 1e-12 are replaced by 1 so
// constant features map to zero. Rejects an empty input.
FeatureScaler zscore_fit(const std::vector<SequenceSample>& train);

// (x - mean) / stddev, per feature. Targets are left in raw EBIT/EV
// units.
std::vector<SequenceSample> zscore_apply(const FeatureScaler& scaler,
                                         std::vector<SequenceSample> samples);
Matrix zscore_apply_window(const FeatureScaler& scaler, Matrix window);

// Inverse transform, x * stddev + mean.
std::vector<SequenceSample> zscore_invert(const FeatureScaler& scaler,
                                          std::vector<SequenceSample> samples);

// Most recent window per company, for ranking: the last window_len
// quarters must be consecutive, otherwise the company is listed as
// omitted.
struct LatestWindows {
    std::vector<std::pair<std::string, Matrix>> windows;
    std::vector<std::string> omitted;
};

LatestWindows latest_windows(const std::vector<QuarterlyRecord>& records,
                             std::size_t window_len = kWindowLen);

// Plain-text persistence, 17 significant digits throughout.
void save_dataset(const std::filesystem::path& path, const std::vector<SequenceSample>& samples);
std::vector<SequenceSample> load_dataset(const std::filesystem::path& path);

void save_scaler(const std::filesystem::path& path, const FeatureScaler& scaler);
FeatureScaler load_scaler(const std::filesystem::path& path);

} // namespace seqscreen

#include "seqscreen/datapipe.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "textio.hpp"

namespace seqscreen {

const std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "revenue",
    "cogs",
    "sga",
    "ebit",
    "net_income",
    "cash_and_equivalents",
    "accounts_receivable",
    "inventory",
    "ppe",
    "oca",
    "debt_in_current_liabilities",
    "accounts_payable",
    "other_current_liabilities",
    "total_liabilities",
};

std::string csv_header() {
    std::string header = "company_id,sector,period,market_cap,ev";
    for (const auto name : kFeatureNames) {
        header += ',';
        header += name;
    }
    return header;
}

Period next_period(Period p) {
    return p.quarter == 4 ? Period{p.year + 1, 1} : Period{p.year, p.quarter + 1};
}

bool is_next_period(Period a, Period b) { return next_period(a) == b; }

std::optional<Period> parse_period(std::string_view text) {
    // YYYY-Qn
    if (text.size() != 7 || text[4] != '-' || text[5] != 'Q') return std::nullopt;
    const auto year = textio::parse_int(text.substr(0, 4));
    const auto quarter = textio::parse_int(text.substr(6, 1));
    if (!year || !quarter || *quarter < 1 || *quarter > 4) return std::nullopt;
    return Period{static_cast<int>(*year), static_cast<int>(*quarter)};
}

std::string format_period(Period p) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-Q%d", p.year, p.quarter);
    return buf;
}

IngestResult ingest_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open input CSV: " + path.string());

    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error(path.string() + ":1: empty file, expected header");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::string expected = csv_header();
    if (line != expected) {
        // point at the first differing column for the diagnostic
        const auto got = textio::split(line, ',');
        const auto want = textio::split(expected, ',');
        std::size_t col = 0;
        while (col < got.size() && col < want.size() && got[col] == want[col]) ++col;
        std::ostringstream msg;
        msg << path.string() << ":1: bad header at column " << (col + 1) << ", expected '";
        msg << (col < want.size() ? want[col] : std::string_view("<end>")) << "', got '";
        msg << (col < got.size() ? got[col] : std::string_view("<end>")) << "'";
        throw std::runtime_error(msg.str());
    }

    IngestResult result;
    const std::size_t n_fields = 5 + kFeatureCount;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto fields = textio::split(line, ',');
        if (fields.size() != n_fields) {
            ++result.rejected.bad_field_count;
            continue;
        }

        QuarterlyRecord rec;
        rec.company_id = std::string(fields[0]);
        rec.sector = std::string(fields[1]);
        const auto period = parse_period(fields[2]);
        if (!period) {
            ++result.rejected.bad_period;
            continue;
        }
        rec.period = *period;

        bool numeric_ok = true;
        const auto read_value = [&](std::string_view field) {
            const auto v = textio::parse_double(field);
            if (!v || !std::isfinite(*v)) {
                numeric_ok = false;
                return 0.0;
            }
            return *v;
        };
        rec.market_cap = read_value(fields[3]);
        rec.ev = read_value(fields[4]);
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            rec.fundamentals[f] = read_value(fields[5 + f]);
        }
        if (!numeric_ok) {
            ++result.rejected.non_numeric;
            continue;
        }
        if (rec.ev == 0.0) {
            ++result.rejected.zero_ev;
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

void write_rejection_report(const std::filesystem::path& path, const RejectionReport& report) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write rejection report: " + path.string());
    os << "reason,count\n";
    os << "bad_field_count," << report.bad_field_count << '\n';
    os << "bad_period," << report.bad_period << '\n';
    os << "non_numeric," << report.non_numeric << '\n';
    os << "zero_ev," << report.zero_ev << '\n';
    os << "total," << report.total() << '\n';
}

namespace {
std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}
} // namespace

std::vector<QuarterlyRecord> filter_universe(const std::vector<QuarterlyRecord>& records,
                                             std::size_t top_n,
                                             const std::set<std::string>& excluded_sectors) {
    std::set<std::string> excluded;
    for (const auto& s : excluded_sectors) excluded.insert(to_lower(s));

    // latest market cap per surviving company
    struct CompanyInfo {
        Period latest;
        double cap = 0.0;
    };
    std::map<std::string, CompanyInfo> companies;
    for (const auto& rec : records) {
        if (excluded.count(to_lower(rec.sector))) continue;
        auto [it, inserted] = companies.try_emplace(rec.company_id,
                                                    CompanyInfo{rec.period, rec.market_cap});
        if (!inserted && rec.period > it->second.latest) {
            it->second = {rec.period, rec.market_cap};
        }
    }

    // rank by latest cap descending, id ascending on ties; the ranking
    // decides membership only, record order is preserved
    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(companies.size());
    for (const auto& [id, info] : companies) ranked.emplace_back(id, info.cap);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > top_n) ranked.resize(top_n);

    std::set<std::string> keep;
    for (const auto& [id, cap] : ranked) keep.insert(id);

    std::vector<QuarterlyRecord> out;
    for (const auto& rec : records) {
        if (keep.count(rec.company_id)) out.push_back(rec);
    }
    return out;
}

std::array<double, kFeatureCount> ev_normalize(const QuarterlyRecord& r) {
    if (r.ev == 0.0) throw std::invalid_argument("ev_normalize: ev is zero");
    std::array<double, kFeatureCount> out{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) out[f] = r.fundamentals[f] / r.ev;
    return out;
}

namespace {
// maximal runs of strictly consecutive quarters; a duplicate period
// ends the current run
std::vector<std::vector<const QuarterlyRecord*>> consecutive_runs(
    std::vector<const QuarterlyRecord*> sorted) {
    std::vector<std::vector<const QuarterlyRecord*>> runs;
    for (const QuarterlyRecord* rec : sorted) {
        if (runs.empty() || !is_next_period(runs.back().back()->period, rec->period)) {
            runs.emplace_back();
        }
        runs.back().push_back(rec);
    }
    return runs;
}
} // namespace

std::vector<SequenceSample> build_windows(const std::vector<QuarterlyRecord>& records,
                                          std::size_t window_len) {
    if (window_len == 0) throw std::invalid_argument("build_windows: window_len must be >= 1");

    // group by company in first-appearance order
    std::vector<std::string> company_order;
    std::map<std::string, std::vector<const QuarterlyRecord*>> by_company;
    for (const auto& rec : records) {
        auto [it, inserted] = by_company.try_emplace(rec.company_id);
        if (inserted) company_order.push_back(rec.company_id);
        it->second.push_back(&rec);
    }

    std::vector<SequenceSample> samples;
    for (const auto& company : company_order) {
        auto& recs = by_company[company];
        std::stable_sort(recs.begin(), recs.end(), [](const QuarterlyRecord* a,
                                                      const QuarterlyRecord* b) {
            return a->period < b->period;
        });
        for (const auto& run : consecutive_runs(recs)) {
            if (run.size() < window_len + 1) continue;
            for (std::size_t start = 0; start + window_len < run.size(); ++start) {
                SequenceSample sample;
                sample.company_id = company;
                sample.window = Matrix(window_len, kFeatureCount);
                for (std::size_t t = 0; t < window_len; ++t) {
                    const auto features = ev_normalize(*run[start + t]);
                    for (std::size_t f = 0; f < kFeatureCount; ++f) {
                        sample.window(t, f) = features[f];
                    }
                }
                const QuarterlyRecord& target_rec = *run[start + window_len];
                sample.target = target_rec.fundamentals[kEbitIndex] / target_rec.ev;
                sample.target_period = target_rec.period;
                samples.push_back(std::move(sample));
            }
        }
    }
    return samples;
}

FeatureScaler zscore_fit(const std::vector<SequenceSample>& train) {
    if (train.empty()) throw std::invalid_argument("zscore_fit: empty training set");
    for (const auto& s : train) {
        if (s.window.cols() != kFeatureCount) {
            throw std::invalid_argument("zscore_fit: window has " +
                                        std::to_string(s.window.cols()) + " features, expected " +
                                        std::to_string(kFeatureCount));
        }
    }

    FeatureScaler scaler;
    std::array<double, kFeatureCount> sum{};
    std::size_t rows = 0;
    for (const auto& s : train) {
        for (std::size_t t = 0; t < s.window.rows(); ++t) {
            for (std::size_t f = 0; f < kFeatureCount; ++f) sum[f] += s.window(t, f);
        }
        rows += s.window.rows();
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        scaler.mean[f] = sum[f] / static_cast<double>(rows);
    }

    std::array<double, kFeatureCount> sq{};
    for (const auto& s : train) {
        for (std::size_t t = 0; t < s.window.rows(); ++t) {
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                const double d = s.window(t, f) - scaler.mean[f];
                sq[f] += d * d;
            }
        }
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        // population standard deviation; constant features get s = 1 so
        // they normalize to zero
        const double s = std::sqrt(sq[f] / static_cast<double>(rows));
        scaler.stddev[f] = s < 1e-12 ? 1.0 : s;
    }
    return scaler;
}

Matrix zscore_apply_window(const FeatureScaler& scaler, Matrix window) {
    if (window.cols() != kFeatureCount) {
        throw std::invalid_argument("zscore_apply: window has " + std::to_string(window.cols()) +
                                    " features, expected " + std::to_string(kFeatureCount));
    }
    for (std::size_t t = 0; t < window.rows(); ++t) {
        for (std::size_t f = 0; f < window.cols(); ++f) {
            window(t, f) = (window(t, f) - scaler.mean[f]) / scaler.stddev[f];
        }
    }
    return window;
}

std::vector<SequenceSample> zscore_apply(const FeatureScaler& scaler,
                                         std::vector<SequenceSample> samples) {
    for (auto& s : samples) s.window = zscore_apply_window(scaler, std::move(s.window));
    return samples;
}

std::vector<SequenceSample> zscore_invert(const FeatureScaler& scaler,
                                          std::vector<SequenceSample> samples) {
    for (auto& s : samples) {
        for (std::size_t t = 0; t < s.window.rows(); ++t) {
            for (std::size_t f = 0; f < s.window.cols(); ++f) {
                s.window(t, f) = s.window(t, f) * scaler.stddev[f] + scaler.mean[f];
            }
        }
    }
    return samples;
}

LatestWindows latest_windows(const std::vector<QuarterlyRecord>& records,
                             std::size_t window_len) {
    std::vector<std::string> company_order;
    std::map<std::string, std::vector<const QuarterlyRecord*>> by_company;
    for (const auto& rec : records) {
        auto [it, inserted] = by_company.try_emplace(rec.company_id);
        if (inserted) company_order.push_back(rec.company_id);
        it->second.push_back(&rec);
    }

    LatestWindows out;
    for (const auto& company : company_order) {
        auto& recs = by_company[company];
        std::stable_sort(recs.begin(), recs.end(), [](const QuarterlyRecord* a,
                                                      const QuarterlyRecord* b) {
            return a->period < b->period;
        });
        const auto runs = consecutive_runs(recs);
        if (runs.empty() || runs.back().size() < window_len) {
            out.omitted.push_back(company);
            continue;
        }
        const auto& run = runs.back();
        Matrix window(window_len, kFeatureCount);
        for (std::size_t t = 0; t < window_len; ++t) {
            const auto features = ev_normalize(*run[run.size() - window_len + t]);
            for (std::size_t f = 0; f < kFeatureCount; ++f) window(t, f) = features[f];
        }
        out.windows.emplace_back(company, std::move(window));
    }
    return out;
}

namespace {
constexpr std::string_view kDatasetMagic = "seqscreen dataset v1";
constexpr std::string_view kScalerMagic = "seqscreen scaler v1";
} // namespace

void save_dataset(const std::filesystem::path& path, const std::vector<SequenceSample>& samples) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write dataset: " + path.string());
    os << kDatasetMagic << '\n';
    os << "features " << kFeatureCount << '\n';
    os << "count " << samples.size() << '\n';
    for (const auto& s : samples) {
        os << "sample " << s.company_id << ' ' << s.window.rows() << ' '
           << textio::format_g17(s.target) << ' ' << format_period(s.target_period) << '\n';
        for (std::size_t t = 0; t < s.window.rows(); ++t) {
            for (std::size_t f = 0; f < s.window.cols(); ++f) {
                if (f) os << ' ';
                os << textio::format_g17(s.window(t, f));
            }
            os << '\n';
        }
    }
    if (!os) throw std::runtime_error("failed writing dataset: " + path.string());
}

std::vector<SequenceSample> load_dataset(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open dataset: " + path.string());

    std::size_t lineno = 0;
    const auto fail = [&](const std::string& what) -> std::runtime_error {
        return std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + what);
    };
    const auto next_line = [&]() {
        std::string line;
        if (!std::getline(is, line)) throw fail("unexpected end of file");
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };

    if (next_line() != kDatasetMagic) throw fail("not a seqscreen v1 dataset");
    const auto features_line = next_line();
    if (features_line != "features " + std::to_string(kFeatureCount)) {
        throw fail("unsupported feature count");
    }
    const auto count_line = next_line();
    if (count_line.rfind("count ", 0) != 0) throw fail("expected 'count N'");
    const auto count = textio::parse_int(std::string_view(count_line).substr(6));
    if (!count || *count < 0) throw fail("bad sample count");

    std::vector<SequenceSample> samples;
    samples.reserve(static_cast<std::size_t>(*count));
    for (long long i = 0; i < *count; ++i) {
        const auto header = next_line();
        const auto fields = textio::split(header, ' ');
        if (fields.size() != 5 || fields[0] != "sample") throw fail("expected sample header");
        SequenceSample s;
        s.company_id = std::string(fields[1]);
        const auto rows = textio::parse_int(fields[2]);
        const auto target = textio::parse_double(fields[3]);
        const auto period = parse_period(fields[4]);
        if (!rows || *rows < 1 || !target || !period) throw fail("bad sample header");
        s.target = *target;
        s.target_period = *period;
        s.window = Matrix(static_cast<std::size_t>(*rows), kFeatureCount);
        for (std::size_t t = 0; t < s.window.rows(); ++t) {
            const auto row = next_line();
            const auto values = textio::split(row, ' ');
            if (values.size() != kFeatureCount) throw fail("wrong value count in window row");
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                const auto v = textio::parse_double(values[f]);
                if (!v) throw fail("bad numeric value in window row");
                s.window(t, f) = *v;
            }
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

void save_scaler(const std::filesystem::path& path, const FeatureScaler& scaler) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write scaler: " + path.string());
    os << kScalerMagic << '\n';
    os << "mean";
    for (const double v : scaler.mean) os << ' ' << textio::format_g17(v);
    os << "\nstddev";
    for (const double v : scaler.stddev) os << ' ' << textio::format_g17(v);
    os << '\n';
}

FeatureScaler load_scaler(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open scaler: " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != kScalerMagic) {
        throw std::runtime_error(path.string() + ": not a seqscreen v1 scaler");
    }
    FeatureScaler scaler;
    const auto read_row = [&](std::string_view key, std::array<double, kFeatureCount>& into) {
        if (!std::getline(is, line)) {
            throw std::runtime_error(path.string() + ": truncated scaler");
        }
        const auto fields = textio::split(line, ' ');
        if (fields.size() != kFeatureCount + 1 || fields[0] != key) {
            throw std::runtime_error(path.string() + ": expected '" + std::string(key) +
                                     "' row with " + std::to_string(kFeatureCount) + " values");
        }
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            const auto v = textio::parse_double(fields[f + 1]);
            if (!v) throw std::runtime_error(path.string() + ": bad numeric value in scaler");
            into[f] = *v;
        }
    };
    read_row("mean", scaler.mean);
    read_row("stddev", scaler.stddev);
    return scaler;
}

} // namespace seqscreen

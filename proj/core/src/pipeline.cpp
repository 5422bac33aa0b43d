#include "seqscreen/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "seqscreen/backprop.hpp"
#include "seqscreen/eval.hpp"
#include "textio.hpp"

namespace seqscreen {

RunConfig default_config() {
    RunConfig cfg;
    cfg.grid.axes = {
        {"hidden_neurons", {40.0, 50.0, 60.0}},
        {"learning_rate", {0.01, 0.001, 0.0001}},
    };
    return cfg;
}

namespace {

[[noreturn]] void config_fail(const std::filesystem::path& path, std::size_t lineno,
                              const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + what);
}

double parse_double_or(const std::filesystem::path& path, std::size_t lineno,
                       std::string_view value) {
    const auto v = textio::parse_double(value);
    if (!v) config_fail(path, lineno, "expected a number, got '" + std::string(value) + "'");
    return *v;
}

std::size_t parse_count_or(const std::filesystem::path& path, std::size_t lineno,
                           std::string_view value) {
    const auto v = textio::parse_int(value);
    if (!v || *v < 0) config_fail(path, lineno, "expected a count, got '" + std::string(value) + "'");
    return static_cast<std::size_t>(*v);
}

bool parse_bool_or(const std::filesystem::path& path, std::size_t lineno,
                   std::string_view value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    config_fail(path, lineno, "expected true/false, got '" + std::string(value) + "'");
}

std::vector<double> parse_double_list(const std::filesystem::path& path, std::size_t lineno,
                                      std::string_view value) {
    std::vector<double> out;
    for (const auto field : textio::split(value, ',')) {
        out.push_back(parse_double_or(path, lineno, textio::trim(field)));
    }
    return out;
}

} // namespace

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file: " + path.string());

    RunConfig cfg = default_config();
    bool grid_given = false;
    std::string section;
    std::string line;
    std::size_t lineno = 0;

    while (std::getline(is, line)) {
        ++lineno;
        std::string_view view = textio::trim(line);
        if (view.empty() || view.front() == '#' || view.front() == ';') continue;

        if (view.front() == '[') {
            if (view.back() != ']') config_fail(path, lineno, "unterminated section header");
            section = std::string(view.substr(1, view.size() - 2));
            if (section != "paths" && section != "universe" && section != "train" &&
                section != "grid" && section != "synth") {
                config_fail(path, lineno, "unknown section [" + section + "]");
            }
            if (section == "grid" && !grid_given) {
                cfg.grid.axes.clear();
                grid_given = true;
            }
            continue;
        }

        const auto eq = view.find('=');
        if (eq == std::string_view::npos) config_fail(path, lineno, "expected 'key = value'");
        const std::string key(textio::trim(view.substr(0, eq)));
        const std::string value(textio::trim(view.substr(eq + 1)));
        if (section.empty()) config_fail(path, lineno, "key '" + key + "' outside any section");

        if (section == "paths") {
            if (key == "input") cfg.input = value;
            else if (key == "model_file") cfg.model_file = value;
            else if (key == "scaler_file") cfg.scaler_file = value;
            else if (key == "out") cfg.out = value;
            else config_fail(path, lineno, "unknown key '" + key + "' in [paths]");
        } else if (section == "universe") {
            if (key == "top_n") {
                cfg.top_n = parse_count_or(path, lineno, value);
            } else if (key == "excluded_sectors") {
                cfg.excluded_sectors.clear();
                if (!value.empty()) {
                    for (const auto field : textio::split(value, ',')) {
                        cfg.excluded_sectors.emplace_back(textio::trim(field));
                    }
                }
            } else {
                config_fail(path, lineno, "unknown key '" + key + "' in [universe]");
            }
        } else if (section == "train") {
            if (key == "model") cfg.model = model_kind_from_string(value);
            else if (key == "hidden_neurons") cfg.hp.hidden_neurons = parse_count_or(path, lineno, value);
            else if (key == "learning_rate") cfg.hp.learning_rate = parse_double_or(path, lineno, value);
            else if (key == "epochs") cfg.hp.epochs = parse_count_or(path, lineno, value);
            else if (key == "batch_size") cfg.hp.batch_size = parse_count_or(path, lineno, value);
            else if (key == "activation") cfg.hp.activation = activation_from_string(value);
            else if (key == "seed") cfg.hp.seed = static_cast<std::uint64_t>(parse_count_or(path, lineno, value));
            else if (key == "split_ratio") cfg.split_ratio = parse_double_or(path, lineno, value);
            else if (key == "emit_epoch_loss") cfg.emit_epoch_loss = parse_bool_or(path, lineno, value);
            else config_fail(path, lineno, "unknown key '" + key + "' in [train]");
        } else if (section == "grid") {
            if (key != "hidden_neurons" && key != "learning_rate" && key != "epochs" &&
                key != "batch_size") {
                config_fail(path, lineno, "unknown grid axis '" + key + "'");
            }
            for (const auto& axis : cfg.grid.axes) {
                if (axis.name == key) config_fail(path, lineno, "duplicate grid axis '" + key + "'");
            }
            cfg.grid.axes.push_back({key, parse_double_list(path, lineno, value)});
        } else if (section == "synth") {
            if (key == "companies") cfg.synth.companies = parse_count_or(path, lineno, value);
            else if (key == "quarters") cfg.synth.quarters = parse_count_or(path, lineno, value);
            else if (key == "start_year") cfg.synth.start_year = static_cast<int>(parse_count_or(path, lineno, value));
            else config_fail(path, lineno, "unknown key '" + key + "' in [synth]");
        }
    }

    // canonical axis order: lexicographic by name
    std::sort(cfg.grid.axes.begin(), cfg.grid.axes.end(),
              [](const GridAxis& a, const GridAxis& b) { return a.name < b.name; });
    return cfg;
}

namespace {

std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    return std::filesystem::path(cfg.out) / name;
}

void ensure_out_dir(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out);
}

struct PipelineData {
    std::vector<QuarterlyRecord> records; // filtered universe
    std::vector<SequenceSample> samples;  // EV-normalized, unscaled
    RejectionReport rejected;
};

PipelineData load_and_window(const RunConfig& cfg) {
    if (cfg.input.empty()) {
        throw std::runtime_error("no input CSV configured (paths.input or --data)");
    }
    PipelineData data;
    IngestResult ingest = ingest_csv(cfg.input);
    data.rejected = ingest.rejected;

    std::set<std::string> excluded(cfg.excluded_sectors.begin(), cfg.excluded_sectors.end());
    data.records = filter_universe(ingest.records, cfg.top_n, excluded);
    data.samples = build_windows(data.records);
    return data;
}

struct PreparedSplit {
    std::vector<SequenceSample> train;
    std::vector<SequenceSample> test;
    FeatureScaler scaler;
};

PreparedSplit split_and_scale(const RunConfig& cfg, const std::vector<SequenceSample>& samples) {
    if (samples.size() < 2) {
        throw std::runtime_error("need at least 2 samples to split, have " +
                                 std::to_string(samples.size()));
    }
    SeededRng split_rng(derive_seed(cfg.hp.seed, "split"));
    auto [train_raw, test_raw] = split(samples, cfg.split_ratio, split_rng);
    PreparedSplit prepared;
    prepared.scaler = zscore_fit(train_raw);
    prepared.train = zscore_apply(prepared.scaler, std::move(train_raw));
    prepared.test = zscore_apply(prepared.scaler, std::move(test_raw));
    return prepared;
}

int run_synth(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    SynthConfig synth_cfg = cfg.synth;
    synth_cfg.seed = cfg.hp.seed;
    const auto records = synth_records(synth_cfg);
    const auto path = out_path(cfg, "synthetic.csv");
    write_records_csv(path, records);
    std::cout << "wrote " << path.string() << " (" << synth_cfg.companies << " companies x "
              << synth_cfg.quarters << " quarters, " << records.size() << " rows)\n";
    return 0;
}

int run_prepare(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    PipelineData data = load_and_window(cfg);
    write_rejection_report(out_path(cfg, "rejections.csv"), data.rejected);

    std::size_t n_train = 0;
    std::size_t n_test = 0;
    if (data.samples.size() >= 2) {
        PreparedSplit prepared = split_and_scale(cfg, data.samples);
        n_train = prepared.train.size();
        n_test = prepared.test.size();
        save_dataset(out_path(cfg, "train.dataset"), prepared.train);
        save_dataset(out_path(cfg, "test.dataset"), prepared.test);
        save_scaler(out_path(cfg, "scaler.txt"), prepared.scaler);
    } else {
        // not enough history to split; persist whatever exists so the
        // artifacts are still inspectable
        n_train = data.samples.size();
        save_dataset(out_path(cfg, "train.dataset"), data.samples);
        save_dataset(out_path(cfg, "test.dataset"), {});
        if (!data.samples.empty()) {
            const FeatureScaler scaler = zscore_fit(data.samples);
            save_scaler(out_path(cfg, "scaler.txt"), scaler);
        }
    }
    std::cout << "prepared " << (n_train + n_test) << " samples (" << n_train << " train, "
              << n_test << " test), rejected " << data.rejected.total() << " rows\n";
    return 0;
}

std::string model_file_name(ModelKind kind) {
    return "model_" + std::string(to_string(kind)) + ".txt";
}

int run_train(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    PipelineData data = load_and_window(cfg);
    write_rejection_report(out_path(cfg, "rejections.csv"), data.rejected);
    PreparedSplit prepared = split_and_scale(cfg, data.samples);

    auto [net, history] = train(cfg.model, prepared.train, cfg.hp);
    const EvaluationReport report = evaluate_model(net, prepared.test);
    history.test_mape = report.mape_percent;

    save_network(net, out_path(cfg, model_file_name(cfg.model)));
    save_scaler(out_path(cfg, "scaler.txt"), prepared.scaler);
    if (cfg.emit_epoch_loss) {
        write_history_csv(out_path(cfg, "history_" + std::string(to_string(cfg.model)) + ".csv"),
                          history);
    }
    std::printf("%s: test MAPE %.4f%% (%zu scored, %zu excluded), %zu train / %zu test samples\n",
                std::string(to_string(cfg.model)).c_str(), report.mape_percent, report.scored,
                report.excluded, prepared.train.size(), prepared.test.size());
    return 0;
}

int run_compare(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    PipelineData data = load_and_window(cfg);
    write_rejection_report(out_path(cfg, "rejections.csv"), data.rejected);
    PreparedSplit prepared = split_and_scale(cfg, data.samples);

    std::vector<EvaluationReport> reports;
    for (const ModelKind kind : {ModelKind::Fnn, ModelKind::Lstm, ModelKind::Gru}) {
        auto [net, history] = train(kind, prepared.train, cfg.hp);
        EvaluationReport report = evaluate_model(net, prepared.test);
        history.test_mape = report.mape_percent;
        reports.push_back(report);
        save_network(net, out_path(cfg, model_file_name(kind)));
        if (cfg.emit_epoch_loss) {
            write_history_csv(out_path(cfg, "history_" + std::string(to_string(kind)) + ".csv"),
                              history);
        }
    }
    save_scaler(out_path(cfg, "scaler.txt"), prepared.scaler);

    const auto sorted = compare_models(std::move(reports));
    write_comparison_csv(out_path(cfg, "comparison.csv"), sorted);
    write_comparison_text(out_path(cfg, "comparison.txt"), sorted);
    for (const auto& r : sorted) {
        std::printf("%-5s MAPE %.4f%% (%zu scored, %zu excluded)\n",
                    std::string(to_string(r.model)).c_str(), r.mape_percent, r.scored, r.excluded);
    }
    std::cout << "best model: " << to_string(sorted.front().model) << '\n';
    return 0;
}

int run_gridsearch(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    PipelineData data = load_and_window(cfg);
    write_rejection_report(out_path(cfg, "rejections.csv"), data.rejected);

    const GridSearchOutcome outcome =
        grid_search(cfg.model, cfg.grid, data.samples, cfg.hp, cfg.split_ratio);

    std::ofstream os(out_path(cfg, "grid_results.csv"));
    if (!os) throw std::runtime_error("cannot write grid results");
    for (std::size_t a = 0; a < cfg.grid.axes.size(); ++a) {
        os << cfg.grid.axes[a].name << ',';
    }
    os << "mape_percent\n";
    for (const auto& result : outcome.results) {
        for (const double v : result.axis_values) os << textio::format_g17(v) << ',';
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", result.mape);
        os << buf << '\n';
    }
    os.close();

    const auto best_it =
        std::min_element(outcome.results.begin(), outcome.results.end(),
                         [](const GridResult& a, const GridResult& b) { return a.mape < b.mape; });
    std::ofstream best(out_path(cfg, "grid_best.txt"));
    best << "model " << to_string(cfg.model) << '\n';
    best << "combinations " << outcome.results.size() << '\n';
    for (std::size_t a = 0; a < cfg.grid.axes.size(); ++a) {
        best << cfg.grid.axes[a].name << ' ' << textio::format_g17(best_it->axis_values[a])
             << '\n';
    }
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", outcome.best_mape);
        best << "mape_percent " << buf << '\n';
    }
    best.close();

    std::printf("evaluated %zu combinations, best MAPE %.4f%%\n", outcome.results.size(),
                outcome.best_mape);
    return 0;
}

int run_rank(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    if (cfg.model_file.empty()) throw std::runtime_error("no model file configured (paths.model_file or --model-file)");
    if (cfg.scaler_file.empty()) throw std::runtime_error("no scaler file configured (paths.scaler_file)");

    const Network net = load_network(cfg.model_file);
    const FeatureScaler scaler = load_scaler(cfg.scaler_file);

    if (cfg.input.empty()) throw std::runtime_error("no input CSV configured (paths.input or --data)");
    IngestResult ingest = ingest_csv(cfg.input);
    write_rejection_report(out_path(cfg, "rejections.csv"), ingest.rejected);
    std::set<std::string> excluded(cfg.excluded_sectors.begin(), cfg.excluded_sectors.end());
    const auto universe = filter_universe(ingest.records, cfg.top_n, excluded);

    const LatestWindows latest = latest_windows(universe, net.seq_len);
    const StockRanking ranking = rank_stocks(net, scaler, latest.windows);

    write_ranking_csv(out_path(cfg, "ranking.csv"), ranking);
    write_ranking_text(out_path(cfg, "ranking.txt"), ranking, latest.omitted);

    std::printf("ranked %zu companies (%zu omitted)\n", ranking.entries.size(),
                latest.omitted.size());
    const std::size_t show = std::min<std::size_t>(10, ranking.entries.size());
    for (std::size_t i = 0; i < show; ++i) {
        std::printf("%2zu. %-20s %.6f\n", i + 1, ranking.entries[i].company_id.c_str(),
                    ranking.entries[i].predicted_ebit_ev);
    }
    return 0;
}

int run_gradcheck(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    constexpr std::size_t kHidden = 4;
    constexpr std::size_t kInput = 3;
    constexpr std::size_t kSeq = 5;
    constexpr double kEpsilon = 1e-5;
    constexpr double kTolerance = 1e-5;
    constexpr int kSeeds = 5;

    std::ofstream os(out_path(cfg, "gradcheck.txt"));
    bool all_ok = true;
    for (const ModelKind kind : {ModelKind::Fnn, ModelKind::Lstm, ModelKind::Gru}) {
        double worst = 0.0;
        for (int s = 1; s <= kSeeds; ++s) {
            const std::uint64_t seed = derive_seed(cfg.hp.seed + s, "gradcheck");
            SeededRng rng(seed);
            const Network net = make_network(kind, kInput, kSeq, kHidden,
                                             ActivationKind::ReLU, rng);
            const Matrix window = make_fd_safe_window(net, rng);
            // keep the target away from the prediction so the central
            // difference never straddles the absolute-value kink
            const double pred = sequence_forward(net, window);
            const double target = pred + (rng.next_unit() < 0.5 ? -1.0 : 1.0) *
                                             rng.uniform(0.25, 1.0);
            worst = std::max(worst, gradient_check(net, window, target, kEpsilon));
        }
        const bool ok = worst < kTolerance;
        all_ok = all_ok && ok;
        char line[128];
        std::snprintf(line, sizeof line, "%-5s max relative error %.3e  [%s]",
                      std::string(to_string(kind)).c_str(), worst, ok ? "ok" : "FAIL");
        std::cout << line << '\n';
        os << line << '\n';
    }
    return all_ok ? 0 : 1;
}

} // namespace

int run_command(const std::string& command, const RunConfig& cfg) {
    try {
        if (command == "synth") return run_synth(cfg);
        if (command == "prepare") return run_prepare(cfg);
        if (command == "train") return run_train(cfg);
        if (command == "compare") return run_compare(cfg);
        if (command == "gridsearch") return run_gridsearch(cfg);
        if (command == "rank") return run_rank(cfg);
        if (command == "gradcheck") return run_gradcheck(cfg);
        throw std::runtime_error("unknown command: " + command);
    } catch (const std::exception& e) {
        std::cerr << "error: " << command << ": " << e.what() << '\n';
        return 1;
    }
}

} // namespace seqscreen

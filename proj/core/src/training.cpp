#include "seqscreen/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "seqscreen/backprop.hpp"
#include "seqscreen/eval.hpp"

namespace seqscreen {

double mae_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.empty() || target.empty()) throw std::invalid_argument("mae_loss: empty input");
    if (pred.size() != target.size()) {
        throw std::invalid_argument("mae_loss: length mismatch, " + std::to_string(pred.size()) +
                                    " vs " + std::to_string(target.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - target[i]);
    return sum / static_cast<double>(pred.size());
}

AdamState make_adam_state(std::size_t params) {
    AdamState state;
    state.m.assign(params, 0.0);
    state.v.assign(params, 0.0);
    return state;
}

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_update(std::span<double* const> params, std::span<const double* const> grads,
                 AdamState& state, double lr) {
    if (params.size() != state.m.size()) {
        throw std::invalid_argument("optimizer_step: state sized for " +
                                    std::to_string(state.m.size()) + " parameters, network has " +
                                    std::to_string(params.size()));
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = *grads[i];
        const double m = state.m[i] = kBeta1 * state.m[i] + (1.0 - kBeta1) * g;
        const double v = state.v[i] = kBeta2 * state.v[i] + (1.0 - kBeta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        *params[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
}
} // namespace

void optimizer_step(Network& net, const Gradients& grads, AdamState& state, double lr) {
    const auto params = parameter_values(net);
    const auto gvals = parameter_values(grads);
    adam_update(params, gvals, state, lr);
}

std::pair<std::vector<SequenceSample>, std::vector<SequenceSample>>
split(const std::vector<SequenceSample>& samples, double ratio, SeededRng& rng) {
    if (samples.size() < 2) throw std::invalid_argument("split: need at least 2 samples");
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw std::invalid_argument("split: ratio must be in (0, 1)");
    }
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);

    // tiny nudge so exact products are not floored down by rounding
    const auto n_train = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(samples.size()) + 1e-9));

    std::pair<std::vector<SequenceSample>, std::vector<SequenceSample>> out;
    out.first.reserve(n_train);
    out.second.reserve(samples.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? out.first : out.second).push_back(samples[order[i]]);
    }
    return out;
}

namespace {
void validate_hp(const Hyperparameters& hp) {
    if (hp.hidden_neurons == 0) throw std::invalid_argument("train: hidden_neurons must be >= 1");
    if (hp.batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");
    if (!(hp.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
}
} // namespace

std::pair<Network, TrainingHistory> train(ModelKind kind,
                                          const std::vector<SequenceSample>& samples,
                                          const Hyperparameters& hp) {
    if (samples.empty()) throw std::invalid_argument("train: empty training set");
    validate_hp(hp);

    const std::size_t seq_len = samples.front().window.rows();
    const std::size_t input_width = samples.front().window.cols();
    for (const auto& s : samples) {
        if (s.window.rows() != seq_len || s.window.cols() != input_width) {
            throw std::invalid_argument("train: inconsistent window shapes in training set");
        }
    }

    SeededRng init_rng(derive_seed(hp.seed, "init"));
    Network net = make_network(kind, input_width, seq_len, hp.hidden_neurons, hp.activation,
                               init_rng);

    TrainingHistory history;
    if (hp.epochs == 0) return {std::move(net), std::move(history)};

    Gradients grads = zero_gradients(net);
    AdamState state = make_adam_state(param_count(net));
    const auto params = parameter_values(net);
    const auto gvals = parameter_values(grads);
    ForwardTrace trace;
    BpttScratch scratch;

    SeededRng shuffle_rng(derive_seed(hp.seed, "shuffle"));
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    history.epoch_loss.reserve(hp.epochs);
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        shuffle(order, shuffle_rng);
        double epoch_loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
            const std::size_t stop = std::min(order.size(), start + hp.batch_size);
            scale_gradients(grads, 0.0);
            for (std::size_t i = start; i < stop; ++i) {
                const SequenceSample& s = samples[order[i]];
                epoch_loss_sum +=
                    backward_accumulate(net, s.window, s.target, grads, trace, scratch);
            }
            // mean gradient over the batch, so lr does not depend on
            // batch size; the final partial batch trains too
            scale_gradients(grads, 1.0 / static_cast<double>(stop - start));
            adam_update(params, gvals, state, hp.learning_rate);
        }
        history.epoch_loss.push_back(epoch_loss_sum / static_cast<double>(order.size()));
    }
    return {std::move(net), std::move(history)};
}

namespace {
void apply_axis(Hyperparameters& hp, const std::string& name, double value) {
    const auto as_count = [&](const char* axis) {
        const double rounded = std::round(value);
        if (std::abs(value - rounded) > 1e-9 || rounded < 1.0) {
            throw std::invalid_argument(std::string("grid axis ") + axis +
                                        " requires a positive integer value");
        }
        return static_cast<std::size_t>(rounded);
    };
    if (name == "hidden_neurons") {
        hp.hidden_neurons = as_count("hidden_neurons");
    } else if (name == "learning_rate") {
        if (!(value > 0.0)) throw std::invalid_argument("grid axis learning_rate must be > 0");
        hp.learning_rate = value;
    } else if (name == "epochs") {
        hp.epochs = as_count("epochs");
    } else if (name == "batch_size") {
        hp.batch_size = as_count("batch_size");
    } else {
        throw std::invalid_argument("unknown grid axis: " + name);
    }
}
} // namespace

GridSearchOutcome grid_search(ModelKind kind, const GridSpace& space,
                              const std::vector<SequenceSample>& samples,
                              const Hyperparameters& base_hp, double split_ratio) {
    if (space.axes.empty()) throw std::invalid_argument("grid_search: empty grid");
    for (const auto& axis : space.axes) {
        if (axis.values.empty()) {
            throw std::invalid_argument("grid_search: axis " + axis.name + " has no values");
        }
    }

    // one shared split and one shared train-side scaler for all
    // combinations, per the single train/test protocol
    SeededRng split_rng(derive_seed(base_hp.seed, "split"));
    auto [train_raw, test_raw] = split(samples, split_ratio, split_rng);
    const FeatureScaler scaler = zscore_fit(train_raw);
    const std::vector<SequenceSample> train_set = zscore_apply(scaler, std::move(train_raw));
    const std::vector<SequenceSample> test_set = zscore_apply(scaler, std::move(test_raw));

    GridSearchOutcome outcome;
    std::vector<std::size_t> index(space.axes.size(), 0);
    bool done = false;
    bool have_best = false;
    while (!done) {
        GridResult result;
        result.hp = base_hp;
        result.axis_values.reserve(space.axes.size());
        for (std::size_t a = 0; a < space.axes.size(); ++a) {
            const double value = space.axes[a].values[index[a]];
            apply_axis(result.hp, space.axes[a].name, value);
            result.axis_values.push_back(value);
        }

        auto [net, history] = train(kind, train_set, result.hp);
        const EvaluationReport report = evaluate_model(net, test_set);
        result.mape = report.mape_percent;
        // strictly-better keeps the earliest combination on ties
        if (!have_best || result.mape < outcome.best_mape) {
            outcome.best = result.hp;
            outcome.best_mape = result.mape;
            have_best = true;
        }
        outcome.results.push_back(std::move(result));

        // odometer, last axis fastest
        std::size_t a = space.axes.size();
        while (a-- > 0) {
            if (++index[a] < space.axes[a].values.size()) break;
            index[a] = 0;
            if (a == 0) done = true;
        }
    }
    return outcome;
}

} // namespace seqscreen

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqscreen/datapipe.hpp"
#include "seqscreen/network.hpp"
#include "seqscreen/rng.hpp"

namespace seqscreen {

struct Hyperparameters {
    std::size_t hidden_neurons = 76;
    double learning_rate = 0.001;
    std::size_t epochs = 200;
    std::size_t batch_size = 12;
    ActivationKind activation = ActivationKind::ReLU;
    std::uint64_t seed = 0;
};

// mean of |pred_i - target_i|; rejects empty or mismatched inputs
double mae_loss(std::span<const double> pred, std::span<const double> target);

// Adam first/second moment accumulators, one pair per parameter.
struct AdamState {
    Vector m;
    Vector v;
    std::uint64_t step = 0;
};

AdamState make_adam_state(std::size_t params);

// One Adam update: decay 0.9 / 0.999, epsilon 1e-8, bias-corrected
// moments, parameters moved opposite the corrected gradient scaled by
// lr.
void optimizer_step(Network& net, const Gradients& grads, AdamState& state, double lr);

// Random 80/20-style partition: uniform permutation by the rng, first
// floor(ratio*n) samples to train, rest to test. Needs at least two
// samples and 0 < ratio < 1.
std::pair<std::vector<SequenceSample>, std::vector<SequenceSample>>
split(const std::vector<SequenceSample>& samples, double ratio, SeededRng& rng);

struct TrainingHistory {
    std::vector<double> epoch_loss; // mean absolute error per epoch
    std::optional<double> test_mape; // percent, filled by the evaluation driver
};

// Mini-batch MAE training. Samples are reshuffled every epoch from a
// stream derived from hp.seed; the final partial batch is trained on;
// each update applies the mean of the per-sample gradients. Bit-exact
// reproducible for a fixed seed.
std::pair<Network, TrainingHistory> train(ModelKind kind,
                                          const std::vector<SequenceSample>& samples,
                                          const Hyperparameters& hp);

// One exhaustive-search axis: a hyperparameter name and its candidate
// values. Recognized names: hidden_neurons, learning_rate, epochs,
// batch_size.
struct GridAxis {
    std::string name;
    std::vector<double> values;
};

struct GridSpace {
    std::vector<GridAxis> axes;
};

struct GridResult {
    Hyperparameters hp;
    std::vector<double> axis_values; // one per axis, in axis order
    double mape = 0.0;
};

struct GridSearchOutcome {
    Hyperparameters best;
    double best_mape = 0.0;
    std::vector<GridResult> results; // cartesian product, first axis slowest
};

// Trains every combination of the grid on one shared train/test split
// of the given EV-normalized samples (standardization fitted on the
// train side only) and returns the combination with minimal test MAPE.
// Ties go to the earliest combination in axis order.
GridSearchOutcome grid_search(ModelKind kind, const GridSpace& space,
                              const std::vector<SequenceSample>& samples,
                              const Hyperparameters& base_hp, double split_ratio = 0.8);

} // namespace seqscreen

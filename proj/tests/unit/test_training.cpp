#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <set>

#include "seqscreen/backprop.hpp"
#include "seqscreen/training.hpp"

using namespace seqscreen;

namespace {

std::vector<SequenceSample> make_samples(std::size_t n, SeededRng& rng,
                                         std::size_t rows = 3,
                                         double constant_target = std::nan("")) {
    std::vector<SequenceSample> samples;
    for (std::size_t i = 0; i < n; ++i) {
        SequenceSample s;
        s.company_id = "C" + std::to_string(i);
        s.window = Matrix(rows, kFeatureCount);
        for (double& v : s.window.values()) v = rng.uniform(-1.0, 1.0);
        s.target = std::isnan(constant_target) ? rng.uniform(-0.5, 0.5) : constant_target;
        s.target_period = {2001, 1};
        samples.push_back(std::move(s));
    }
    return samples;
}

Vector flat_params(const Network& net) {
    Vector out;
    for (const double* p : parameter_values(net)) out.push_back(*p);
    return out;
}

} // namespace

TEST_CASE("mae_loss basics") {
    CHECK(mae_loss(Vector{1, 2, 3}, Vector{1, 2, 3}) == 0.0);
    CHECK(mae_loss(Vector{1, 3}, Vector{2, 2}) == 1.0);
    CHECK(mae_loss(Vector{1, 3}, Vector{2, 2}) == mae_loss(Vector{2, 2}, Vector{1, 3}));
    CHECK_THROWS_AS(mae_loss(Vector{}, Vector{}), std::invalid_argument);
    CHECK_THROWS_AS(mae_loss(Vector{1}, Vector{1, 2}), std::invalid_argument);
}

TEST_CASE("zero gradient leaves parameters untouched") {
    SeededRng rng(71);
    Network net = make_network(ModelKind::Fnn, 2, 2, 3, ActivationKind::ReLU, rng);
    const Vector before = flat_params(net);
    const Gradients zeros = zero_gradients(net);
    AdamState state = make_adam_state(param_count(net));
    optimizer_step(net, zeros, state, 0.01);
    CHECK(flat_params(net) == before);
}

TEST_CASE("constant gradient drives steps of magnitude near lr") {
    SeededRng rng(72);
    Network net = make_network(ModelKind::Fnn, 2, 2, 3, ActivationKind::ReLU, rng);
    Gradients grads = zero_gradients(net);
    grads.out.b[0] = 0.37; // one coordinate with a constant gradient
    AdamState state = make_adam_state(param_count(net));

    const double lr = 0.01;
    const double untouched_before = net.out.w(0, 0);
    double prev = net.out.b[0];
    double last_step = 0.0;
    for (int i = 0; i < 3000; ++i) {
        optimizer_step(net, grads, state, lr);
        last_step = std::abs(net.out.b[0] - prev);
        prev = net.out.b[0];
    }
    // moments converge to g and g^2, so the step approaches lr
    CHECK(last_step == doctest::Approx(lr).epsilon(0.01));
    // zero-gradient coordinates stay put
    CHECK(net.out.w(0, 0) == untouched_before);
}

TEST_CASE("identical networks and gradient streams stay identical") {
    SeededRng seed_a(73);
    SeededRng seed_b(73);
    Network a = make_network(ModelKind::Gru, 2, 3, 3, ActivationKind::ReLU, seed_a);
    Network b = make_network(ModelKind::Gru, 2, 3, 3, ActivationKind::ReLU, seed_b);
    AdamState sa = make_adam_state(param_count(a));
    AdamState sb = make_adam_state(param_count(b));

    SeededRng grad_rng(99);
    for (int step = 0; step < 20; ++step) {
        Gradients g = zero_gradients(a);
        for (double* v : parameter_values(g)) *v = grad_rng.uniform(-1.0, 1.0);
        optimizer_step(a, g, sa, 0.003);
        optimizer_step(b, g, sb, 0.003);
    }
    CHECK(flat_params(a) == flat_params(b));
}

TEST_CASE("split proportions and determinism") {
    SeededRng rng(74);
    const auto samples = make_samples(10, rng);

    SeededRng r1(5);
    const auto [train1, test1] = split(samples, 0.8, r1);
    CHECK(train1.size() == 8);
    CHECK(test1.size() == 2);

    SeededRng r2(5);
    const auto [train2, test2] = split(samples, 0.8, r2);
    for (std::size_t i = 0; i < train1.size(); ++i) {
        CHECK(train1[i].company_id == train2[i].company_id);
    }

    SeededRng r3(6);
    const auto [train3, test3] = split(samples, 0.8, r3);
    bool differs = false;
    for (std::size_t i = 0; i < train1.size(); ++i) {
        if (train1[i].company_id != train3[i].company_id) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("split preserves the multiset over random cases") {
    SeededRng rng(75);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 2 + rng.below(30);
        const auto samples = make_samples(n, rng);
        SeededRng split_rng(rng.next_u64());
        const double ratio = 0.1 + 0.8 * rng.next_unit();
        const auto [train_set, test_set] = split(samples, ratio, split_rng);

        CHECK(train_set.size() + test_set.size() == n);
        CHECK(train_set.size() ==
              static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9)));

        std::multiset<std::string> seen;
        for (const auto& s : train_set) seen.insert(s.company_id);
        for (const auto& s : test_set) seen.insert(s.company_id);
        std::multiset<std::string> expected;
        for (const auto& s : samples) expected.insert(s.company_id);
        CHECK(seen == expected);

        // ids are unique, so disjointness follows from the multiset
        // equality plus the size check
        std::set<std::string> unique(seen.begin(), seen.end());
        CHECK(unique.size() == n);
    }
}

TEST_CASE("split rejects degenerate inputs") {
    SeededRng rng(76);
    const auto one = make_samples(1, rng);
    SeededRng r(1);
    CHECK_THROWS_AS(split(one, 0.8, r), std::invalid_argument);
    const auto two = make_samples(2, rng);
    CHECK_THROWS_AS(split(two, 0.0, r), std::invalid_argument);
    CHECK_THROWS_AS(split(two, 1.0, r), std::invalid_argument);
}

TEST_CASE("training fits a constant target with every model kind") {
    SeededRng rng(77);
    const auto samples = make_samples(16, rng, 3, 0.3);
    Hyperparameters hp;
    hp.hidden_neurons = 6;
    hp.learning_rate = 0.005;
    hp.epochs = 200;
    hp.batch_size = 12;
    hp.seed = 123;

    for (const ModelKind kind : {ModelKind::Fnn, ModelKind::Lstm, ModelKind::Gru}) {
        const auto [net, history] = train(kind, samples, hp);
        REQUIRE(history.epoch_loss.size() == hp.epochs);
        const double final_loss = history.epoch_loss.back();
        CHECK(final_loss < 0.01);
    }
}

TEST_CASE("zero epochs returns the untouched initialization") {
    SeededRng rng(78);
    const auto samples = make_samples(6, rng);
    Hyperparameters hp;
    hp.hidden_neurons = 4;
    hp.epochs = 0;
    hp.seed = 9;

    const auto [net1, hist1] = train(ModelKind::Lstm, samples, hp);
    const auto [net2, hist2] = train(ModelKind::Lstm, samples, hp);
    CHECK(hist1.epoch_loss.empty());
    CHECK(flat_params(net1) == flat_params(net2));

    hp.epochs = 1;
    const auto [net3, hist3] = train(ModelKind::Lstm, samples, hp);
    CHECK(flat_params(net1) != flat_params(net3));
}

TEST_CASE("training is bit-identical under a fixed seed") {
    SeededRng rng(79);
    const auto samples = make_samples(10, rng);
    Hyperparameters hp;
    hp.hidden_neurons = 4;
    hp.epochs = 5;
    hp.batch_size = 4;
    hp.seed = 321;

    const auto [net1, hist1] = train(ModelKind::Gru, samples, hp);
    const auto [net2, hist2] = train(ModelKind::Gru, samples, hp);
    CHECK(hist1.epoch_loss == hist2.epoch_loss);
    CHECK(flat_params(net1) == flat_params(net2));
}

TEST_CASE("epoch loss is the sample-weighted batch mean") {
    // three identical samples with batch size 2 give batches of 2 and
    // 1; the epoch mean must weight them 2:1
    SeededRng rng(80);
    auto samples = make_samples(1, rng);
    samples.push_back(samples.front());
    samples.push_back(samples.front());
    for (auto& s : samples) s.target = 0.8;

    Hyperparameters hp;
    hp.hidden_neurons = 3;
    hp.epochs = 1;
    hp.batch_size = 2;
    hp.learning_rate = 0.05;
    hp.seed = 11;

    const auto [net_after, history] = train(ModelKind::Fnn, samples, hp);
    REQUIRE(history.epoch_loss.size() == 1);

    // replay by hand: all samples are identical, so the shuffle order
    // is irrelevant
    hp.epochs = 0;
    auto [net0, ignored] = train(ModelKind::Fnn, samples, hp);
    const double loss0 = std::abs(sequence_forward(net0, samples[0].window) - samples[0].target);

    auto [sample_loss, grads] = backward(net0, samples[0].window, samples[0].target);
    CHECK(sample_loss == loss0);
    AdamState state = make_adam_state(param_count(net0));
    optimizer_step(net0, grads, state, hp.learning_rate); // mean of two equal gradients
    const double loss1 = std::abs(sequence_forward(net0, samples[0].window) - samples[0].target);

    const double weighted = (2.0 * loss0 + loss1) / 3.0;
    const double unweighted = (loss0 + loss1) / 2.0;
    CHECK(history.epoch_loss[0] == doctest::Approx(weighted).epsilon(1e-12));
    CHECK(history.epoch_loss[0] != doctest::Approx(unweighted).epsilon(1e-12));
}

TEST_CASE("train rejects an empty training set") {
    Hyperparameters hp;
    CHECK_THROWS_AS(train(ModelKind::Fnn, {}, hp), std::invalid_argument);
}

TEST_CASE("grid search walks the whole cartesian product") {
    SeededRng rng(81);
    const auto samples = make_samples(24, rng);
    Hyperparameters base;
    base.epochs = 2;
    base.batch_size = 8;
    base.seed = 55;

    GridSpace space;
    space.axes = {
        {"hidden_neurons", {2, 3, 4}},
        {"learning_rate", {0.01, 0.003, 0.001}},
    };

    const GridSearchOutcome outcome = grid_search(ModelKind::Fnn, space, samples, base);
    CHECK(outcome.results.size() == 9);

    double min_mape = outcome.results.front().mape;
    for (const auto& r : outcome.results) min_mape = std::min(min_mape, r.mape);
    CHECK(outcome.best_mape == min_mape);

    // lexicographic iteration: first axis slowest
    CHECK(outcome.results[0].axis_values == std::vector<double>{2, 0.01});
    CHECK(outcome.results[1].axis_values == std::vector<double>{2, 0.003});
    CHECK(outcome.results[3].axis_values == std::vector<double>{3, 0.01});
}

TEST_CASE("single-combination grid returns that combination") {
    SeededRng rng(82);
    const auto samples = make_samples(12, rng);
    Hyperparameters base;
    base.epochs = 1;
    base.seed = 3;

    GridSpace space;
    space.axes = {{"hidden_neurons", {5}}};
    const GridSearchOutcome outcome = grid_search(ModelKind::Gru, space, samples, base);
    CHECK(outcome.results.size() == 1);
    CHECK(outcome.best.hidden_neurons == 5);
    CHECK(outcome.best_mape == outcome.results[0].mape);
}

TEST_CASE("grid ties go to the earliest combination") {
    SeededRng rng(83);
    const auto samples = make_samples(12, rng);
    Hyperparameters base;
    base.epochs = 2;
    base.seed = 4;

    // both batch sizes exceed the train split, so the runs coincide and
    // the scores tie exactly
    GridSpace space;
    space.axes = {{"batch_size", {64, 96}}};
    const GridSearchOutcome outcome = grid_search(ModelKind::Fnn, space, samples, base);
    REQUIRE(outcome.results.size() == 2);
    CHECK(outcome.results[0].mape == outcome.results[1].mape);
    CHECK(outcome.best.batch_size == 64);
}

TEST_CASE("grid search rejects bad axes") {
    SeededRng rng(84);
    const auto samples = make_samples(8, rng);
    Hyperparameters base;
    base.epochs = 1;

    CHECK_THROWS_AS(grid_search(ModelKind::Fnn, GridSpace{}, samples, base),
                    std::invalid_argument);
    GridSpace empty_axis;
    empty_axis.axes = {{"hidden_neurons", {}}};
    CHECK_THROWS_AS(grid_search(ModelKind::Fnn, empty_axis, samples, base),
                    std::invalid_argument);
    GridSpace unknown;
    unknown.axes = {{"layers", {1, 2, 3}}};
    CHECK_THROWS_AS(grid_search(ModelKind::Fnn, unknown, samples, base), std::invalid_argument);
    GridSpace fractional;
    fractional.axes = {{"hidden_neurons", {2.5}}};
    CHECK_THROWS_AS(grid_search(ModelKind::Fnn, fractional, samples, base),
                    std::invalid_argument);
}

// Microbenchmarks for the hot paths of the training loop: the fused
// matrix-vector kernel, single cell steps, and a full per-sample
// forward/backward pass at the production network size (hidden 76,
// 14 features, 8 quarters).

#include <benchmark/benchmark.h>

#include "seqscreen/backprop.hpp"
#include "seqscreen/cells.hpp"
#include "seqscreen/network.hpp"
#include "seqscreen/rng.hpp"

using namespace seqscreen;

namespace {

constexpr std::size_t kHidden = 76;
constexpr std::size_t kInput = 14;
constexpr std::size_t kSeq = 8;

Matrix random_window(SeededRng& rng) {
    Matrix w(kSeq, kInput);
    for (double& v : w.values()) v = rng.uniform(-1.0, 1.0);
    return w;
}

void BM_MatVec(benchmark::State& state) {
    SeededRng rng(7);
    const Matrix a = glorot_uniform(kHidden + kInput, kHidden, rng);
    Vector x(kHidden + kInput, 0.3);
    Vector y(kHidden);
    for (auto _ : state) {
        matvec(a, x.data(), y.data());
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * a.rows() * a.cols());
}
BENCHMARK(BM_MatVec);

void BM_LstmCellForward(benchmark::State& state) {
    SeededRng rng(7);
    const Network net = make_network(ModelKind::Lstm, kInput, kSeq, kHidden,
                                     ActivationKind::ReLU, rng);
    const auto& p = std::get<LSTMParams>(net.stage1);
    Vector x(kInput, 0.25);
    CellState prev{Vector(kHidden, 0.1), Vector(kHidden, 0.05)};
    GateTrace tr;
    for (auto _ : state) {
        detail::lstm_step(p, x.data(), prev.h.data(), prev.c.data(), tr);
        benchmark::DoNotOptimize(tr.h.data());
    }
}
BENCHMARK(BM_LstmCellForward);

void BM_GruCellForward(benchmark::State& state) {
    SeededRng rng(7);
    const Network net = make_network(ModelKind::Gru, kInput, kSeq, kHidden,
                                     ActivationKind::ReLU, rng);
    const auto& p = std::get<GRUParams>(net.stage1);
    Vector x(kInput, 0.25);
    Vector h(kHidden, 0.1);
    GateTrace tr;
    for (auto _ : state) {
        detail::gru_step(p, x.data(), h.data(), tr);
        benchmark::DoNotOptimize(tr.h.data());
    }
}
BENCHMARK(BM_GruCellForward);

void bench_backward(benchmark::State& state, ModelKind kind) {
    SeededRng rng(7);
    const Network net = make_network(kind, kInput, kSeq, kHidden, ActivationKind::ReLU, rng);
    const Matrix window = random_window(rng);
    Gradients grads = zero_gradients(net);
    ForwardTrace trace;
    BpttScratch scratch;
    for (auto _ : state) {
        scale_gradients(grads, 0.0);
        const double loss = backward_accumulate(net, window, 0.1, grads, trace, scratch);
        benchmark::DoNotOptimize(loss);
    }
}

void BM_FnnBackward(benchmark::State& state) { bench_backward(state, ModelKind::Fnn); }
void BM_LstmBackward(benchmark::State& state) { bench_backward(state, ModelKind::Lstm); }
void BM_GruBackward(benchmark::State& state) { bench_backward(state, ModelKind::Gru); }
BENCHMARK(BM_FnnBackward);
BENCHMARK(BM_LstmBackward);
BENCHMARK(BM_GruBackward);

} // namespace

BENCHMARK_MAIN();

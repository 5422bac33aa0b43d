#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "seqscreen/cells.hpp"
#include "seqscreen/rng.hpp"

using namespace seqscreen;

namespace {

LSTMParams scalar_lstm(double weight, double bf = 0.0, double bi = 0.0, double bk = 0.0,
                       double bo = 0.0) {
    LSTMParams p;
    p.w_f = Matrix::from_rows({{weight, weight}});
    p.w_i = Matrix::from_rows({{weight, weight}});
    p.w_k = Matrix::from_rows({{weight, weight}});
    p.w_o = Matrix::from_rows({{weight, weight}});
    p.b_f = {bf};
    p.b_i = {bi};
    p.b_k = {bk};
    p.b_o = {bo};
    return p;
}

GRUParams scalar_gru(double weight, double br = 0.0, double bu = 0.0, double bh = 0.0) {
    GRUParams p;
    p.w_r = Matrix::from_rows({{weight, weight}});
    p.w_u = Matrix::from_rows({{weight, weight}});
    p.w_h = Matrix::from_rows({{weight, weight}});
    p.b_r = {br};
    p.b_u = {bu};
    p.b_h = {bh};
    return p;
}

LSTMParams random_lstm(std::size_t hidden, std::size_t input, SeededRng& rng) {
    LSTMParams p;
    p.w_f = glorot_uniform(hidden + input, hidden, rng);
    p.w_i = glorot_uniform(hidden + input, hidden, rng);
    p.w_k = glorot_uniform(hidden + input, hidden, rng);
    p.w_o = glorot_uniform(hidden + input, hidden, rng);
    p.b_f = Vector(hidden, 0.0);
    p.b_i = Vector(hidden, 0.0);
    p.b_k = Vector(hidden, 0.0);
    p.b_o = Vector(hidden, 0.0);
    return p;
}

GRUParams random_gru(std::size_t hidden, std::size_t input, SeededRng& rng) {
    GRUParams p;
    p.w_r = glorot_uniform(hidden + input, hidden, rng);
    p.w_u = glorot_uniform(hidden + input, hidden, rng);
    p.w_h = glorot_uniform(hidden + input, hidden, rng);
    p.b_r = Vector(hidden, 0.0);
    p.b_u = Vector(hidden, 0.0);
    p.b_h = Vector(hidden, 0.0);
    return p;
}

} // namespace

TEST_CASE("zero LSTM cell from a zero state") {
    LSTMParams p = scalar_lstm(0.0);
    const auto [state, trace] = lstm_cell_forward(p, {0.0}, CellState{{0.0}, {0.0}});
    CHECK(trace.f[0] == 0.5);
    CHECK(trace.i[0] == 0.5);
    CHECK(trace.o[0] == 0.5);
    CHECK(trace.k[0] == 0.0);
    CHECK(state.c[0] == 0.0);
    CHECK(state.h[0] == 0.0);
}

TEST_CASE("scalar LSTM cell matches the hand-evaluated chain") {
    // weights 0.5, biases 0, x = 1, zero previous state: every gate
    // pre-activation is 0.5*0 + 0.5*1 = 0.5
    LSTMParams p = scalar_lstm(0.5);
    const auto [state, trace] = lstm_cell_forward(p, {1.0}, CellState{{0.0}, {0.0}});

    const double gate = 1.0 / (1.0 + std::exp(-0.5));
    const double cand = std::tanh(0.5);
    const double c = gate * 0.0 + gate * cand;
    const double h = gate * std::tanh(c);

    CHECK(std::abs(trace.f[0] - gate) < 1e-9);
    CHECK(std::abs(trace.i[0] - gate) < 1e-9);
    CHECK(std::abs(trace.o[0] - gate) < 1e-9);
    CHECK(std::abs(trace.k[0] - cand) < 1e-9);
    CHECK(std::abs(state.c[0] - c) < 1e-9);
    CHECK(std::abs(state.h[0] - h) < 1e-9);

    // published decimals for the same case
    CHECK(std::abs(trace.f[0] - 0.6225) < 1e-4);
    CHECK(std::abs(trace.k[0] - 0.4621) < 1e-4);
    CHECK(std::abs(state.c[0] - 0.2877) < 1e-4);
    CHECK(std::abs(state.h[0] - 0.1743) < 1e-4);
}

TEST_CASE("saturated forget and closed input gate preserve the cell state") {
    LSTMParams p = scalar_lstm(0.5, /*bf=*/50.0, /*bi=*/-50.0);
    const CellState prev{{0.3}, {0.7}};
    const auto [state, trace] = lstm_cell_forward(p, {1.0}, prev);
    CHECK(std::abs(state.c[0] - prev.c[0]) < 1e-12);
}

TEST_CASE("LSTM cell rejects mismatched shapes") {
    LSTMParams p = scalar_lstm(0.5);
    CHECK_THROWS_AS(lstm_cell_forward(p, {1.0, 2.0}, CellState{{0.0}, {0.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(lstm_cell_forward(p, {1.0}, CellState{{0.0, 0.0}, {0.0, 0.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(lstm_cell_forward(p, {1.0}, CellState{{0.0}, {0.0, 0.0}}),
                    std::invalid_argument);
}

TEST_CASE("zero GRU cell from a zero state") {
    GRUParams p = scalar_gru(0.0);
    const auto [h, trace] = gru_cell_forward(p, {0.0}, {0.0});
    CHECK(trace.r[0] == 0.5);
    CHECK(trace.u[0] == 0.5);
    CHECK(trace.hbar[0] == 0.0);
    CHECK(h[0] == 0.0);
}

TEST_CASE("scalar GRU cell matches the hand-evaluated chain") {
    GRUParams p = scalar_gru(0.5);
    const auto [h, trace] = gru_cell_forward(p, {1.0}, {0.0});

    const double gate = 1.0 / (1.0 + std::exp(-0.5));
    const double cand = std::tanh(0.5 * (gate * 0.0) + 0.5 * 1.0);
    const double expected = (1.0 - gate) * 0.0 + gate * cand;

    CHECK(std::abs(trace.r[0] - gate) < 1e-9);
    CHECK(std::abs(trace.u[0] - gate) < 1e-9);
    CHECK(std::abs(trace.hbar[0] - cand) < 1e-9);
    CHECK(std::abs(h[0] - expected) < 1e-9);

    CHECK(std::abs(trace.r[0] - 0.6225) < 1e-4);
    CHECK(std::abs(trace.hbar[0] - 0.4621) < 1e-4);
    CHECK(std::abs(h[0] - 0.2877) < 1e-4);
}

TEST_CASE("closed update gate preserves the hidden state") {
    GRUParams p = scalar_gru(0.5, /*br=*/0.0, /*bu=*/-50.0);
    const auto [h, trace] = gru_cell_forward(p, {1.0}, {0.42});
    CHECK(std::abs(h[0] - 0.42) < 1e-12);
}

TEST_CASE("GRU cell rejects mismatched shapes") {
    GRUParams p = scalar_gru(0.5);
    CHECK_THROWS_AS(gru_cell_forward(p, {1.0, 2.0}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(gru_cell_forward(p, {1.0}, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("gate ranges hold for random cells and inputs") {
    SeededRng rng(31);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t hidden = 1 + rng.below(6);
        const std::size_t input = 1 + rng.below(6);

        Vector x(input);
        Vector h0(hidden);
        Vector c0(hidden);
        for (double& v : x) v = rng.uniform(-3.0, 3.0);
        for (double& v : h0) v = rng.uniform(-0.9, 0.9);
        for (double& v : c0) v = rng.uniform(-2.0, 2.0);

        LSTMParams lp = random_lstm(hidden, input, rng);
        const auto [lstate, ltrace] = lstm_cell_forward(lp, x, CellState{h0, c0});
        for (std::size_t j = 0; j < hidden; ++j) {
            CHECK(ltrace.f[j] > 0.0);
            CHECK(ltrace.f[j] < 1.0);
            CHECK(ltrace.i[j] > 0.0);
            CHECK(ltrace.i[j] < 1.0);
            CHECK(ltrace.o[j] > 0.0);
            CHECK(ltrace.o[j] < 1.0);
            CHECK(ltrace.k[j] > -1.0);
            CHECK(ltrace.k[j] < 1.0);
            // |h| < 1 always: a sigmoid gate times a tanh
            CHECK(std::abs(lstate.h[j]) < 1.0);
        }

        GRUParams gp = random_gru(hidden, input, rng);
        const auto [gh, gtrace] = gru_cell_forward(gp, x, h0);
        for (std::size_t j = 0; j < hidden; ++j) {
            CHECK(gtrace.r[j] > 0.0);
            CHECK(gtrace.r[j] < 1.0);
            CHECK(gtrace.u[j] > 0.0);
            CHECK(gtrace.u[j] < 1.0);
            CHECK(gtrace.hbar[j] > -1.0);
            CHECK(gtrace.hbar[j] < 1.0);
            // with |h_prev| < 1 the convex mix stays inside (-1, 1)
            CHECK(std::abs(gh[j]) < 1.0);
        }
    }
}

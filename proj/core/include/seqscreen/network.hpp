#pragma once

#include <cstddef>
#include <filesystem>
#include <string_view>
#include <variant>

#include "seqscreen/activations.hpp"
#include "seqscreen/matrix.hpp"
#include "seqscreen/rng.hpp"

namespace seqscreen {

enum class ModelKind { Fnn, Lstm, Gru };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

// One fully connected layer: y = act(W.x + b), W is out x in.
struct DenseParams {
    Matrix w;
    Vector b;
    ActivationKind act = ActivationKind::Identity;
};

// Gate weights act on the concatenation [h_prev, x], so each matrix is
// hidden x (hidden + input). f/i/o are sigmoid gates, k is the tanh
// candidate written into the cell state.
struct LSTMParams {
    Matrix w_f, w_i, w_k, w_o;
    Vector b_f, b_i, b_k, b_o;

    std::size_t hidden() const { return w_f.rows(); }
    std::size_t input() const { return w_f.cols() - w_f.rows(); }
};

// r is the reset gate, u the update gate, h the candidate state. Same
// hidden x (hidden + input) layout as the LSTM gates.
struct GRUParams {
    Matrix w_r, w_u, w_h;
    Vector b_r, b_u, b_h;

    std::size_t hidden() const { return w_r.rows(); }
    std::size_t input() const { return w_r.cols() - w_r.rows(); }
};

// Recurrent state threaded between timesteps. c is used by the LSTM
// only and stays empty for the GRU.
struct CellState {
    Vector h;
    Vector c;
};

// Everything one cell step produced, retained so backpropagation
// through time can replay it. LSTM steps fill f/i/k/o/c/tanh_c, GRU
// steps fill r/u/hbar/z2. z is the gate input [h_prev, x]; z2 is the
// GRU candidate input [r*h_prev, x].
struct GateTrace {
    Vector f, i, k, o;
    Vector r, u, hbar;
    Vector c, h;
    Vector c_prev;
    Vector tanh_c;
    Vector z, z2;
};

// A full regression network: stage one is either the recurrent cell
// (LSTM/GRU, applied per timestep) or, for the FNN baseline, a dense
// layer over the flattened window; then a dense hidden layer and a
// single linear output neuron.
struct Network {
    ModelKind kind = ModelKind::Lstm;
    std::size_t input_width = 0; // features per timestep
    std::size_t seq_len = 0;     // timesteps per window
    std::size_t hidden = 0;      // hidden neurons, all layers

    std::variant<DenseParams, LSTMParams, GRUParams> stage1;
    DenseParams dense; // hidden x hidden
    DenseParams out;   // 1 x hidden, identity

    std::size_t flat_input() const { return input_width * seq_len; }
};

// Same tensor layout as the owning Network, holding one partial
// derivative per parameter.
struct Gradients {
    std::variant<DenseParams, LSTMParams, GRUParams> stage1;
    DenseParams dense;
    DenseParams out;
};

// Glorot-uniform weights, zero biases. Draw order is fixed: stage-one
// tensors in declaration order, then the dense layer, then the output
// layer. Verifies the closed-form parameter counts on construction.
Network make_network(ModelKind kind, std::size_t input_width, std::size_t seq_len,
                     std::size_t hidden, ActivationKind dense_act, SeededRng& rng);

Gradients zero_gradients(const Network& net);

std::size_t param_count(const Network& net);

// Flat views over every trainable value, in the same fixed order used
// by make_network, the optimizer, persistence and the gradient checker.
std::vector<double*> parameter_values(Network& net);
std::vector<const double*> parameter_values(const Network& net);
std::vector<double*> parameter_values(Gradients& grads);
std::vector<const double*> parameter_values(const Gradients& grads);

void scale_gradients(Gradients& grads, double factor);

// Versioned plain-text model file: a header naming kind and sizes, then
// each tensor as a named block of row-major values printed with 17
// significant digits, which round-trips IEEE doubles exactly.
void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

} // namespace seqscreen

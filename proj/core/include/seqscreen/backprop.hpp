#pragma once

#include <utility>
#include <vector>

#include "seqscreen/cells.hpp"
#include "seqscreen/network.hpp"

namespace seqscreen {

// Per-sample forward record: cell traces for every timestep (recurrent
// kinds), the flattened input and first-layer output (FNN), the dense
// hidden activation and the scalar prediction. Reusable across samples
// without reallocation.
struct ForwardTrace {
    std::vector<GateTrace> steps;
    Vector x_flat;
    Vector s1_pre, s1_out;
    Vector dense_pre, dense_out;
    double prediction = 0.0;
};

// Scratch buffers for one backward pass, sized once per network shape.
struct BpttScratch {
    Vector dh, dc, dgate_f, dgate_i, dgate_k, dgate_o, dz, dstage, ddense;
};

// FNN forward over an already-flattened input of length
// input_width * seq_len.
double fnn_forward(const Network& net, const Vector& x);

// Full forward over one window (seq_len rows x input_width columns).
// Recurrent state starts at zero; the last hidden state feeds the dense
// layer and the linear output neuron. The FNN variant flattens the
// window row-major (oldest timestep first).
double sequence_forward(const Network& net, const Matrix& window);

void forward_trace(const Network& net, const Matrix& window, ForwardTrace& trace);

// Absolute-error loss |prediction - target| and its exact analytic
// gradient for every parameter, by backpropagation through time over
// the whole window. At prediction == target the subgradient 0 is used,
// so all gradients are zero there.
std::pair<double, Gradients> backward(const Network& net, const Matrix& window, double target);

// Accumulating variant used by the training loop: adds this sample's
// gradients into `grads` and returns the sample loss. `trace` and
// `scratch` are caller-owned so batches run without reallocation.
double backward_accumulate(const Network& net, const Matrix& window, double target,
                           Gradients& grads, ForwardTrace& trace, BpttScratch& scratch);

// Central-difference verification of the analytic gradient: perturbs
// every parameter by +/-epsilon and returns the max-norm relative
// error, max_i |analytic_i - numeric_i| divided by the larger of the
// two gradient max-norms, with a 1e-12 denominator floor.
double gradient_check(const Network& net, const Matrix& window, double target, double epsilon);

// Same comparison against a caller-supplied gradient, which lets tests
// confirm the checker flags a corrupted gradient.
double gradient_check_against(const Network& net, const Matrix& window, double target,
                              double epsilon, const Gradients& analytic);

// Random window whose forward pass keeps every ReLU pre-activation at
// least `margin` away from zero. Central differences are only valid
// away from the activation kink, so gradient verification draws its
// probes here.
Matrix make_fd_safe_window(const Network& net, SeededRng& rng, double margin = 1e-3);

} // namespace seqscreen

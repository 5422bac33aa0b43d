#pragma once

#include <utility>

#include "seqscreen/network.hpp"

namespace seqscreen {

// One LSTM step. Computes the forget, input and output gates and the
// candidate from [h_prev, x], then
//   c = f*c_prev + i*k,  h = o*tanh(c).
// Returns the new state plus the trace needed for backpropagation.
// Rejects mismatched shapes.
std::pair<CellState, GateTrace> lstm_cell_forward(const LSTMParams& p, const Vector& x,
                                                  const CellState& prev);

// One GRU step. Reset and update gates from [h_prev, x], candidate from
// [r*h_prev, x], then h = (1-u)*h_prev + u*hbar.
std::pair<Vector, GateTrace> gru_cell_forward(const GRUParams& p, const Vector& x,
                                              const Vector& prev_h);

namespace detail {
// In-place step kernels reused by the sequence forward/backward paths;
// they resize the trace vectors as needed and avoid reallocating when a
// trace object is reused across samples.
void lstm_step(const LSTMParams& p, const double* x, const double* h_prev,
               const double* c_prev, GateTrace& tr);
void gru_step(const GRUParams& p, const double* x, const double* h_prev, GateTrace& tr);
} // namespace detail

} // namespace seqscreen

#include "seqscreen/cells.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace seqscreen {

namespace {
void check_shapes(std::size_t hidden, std::size_t input, std::size_t x_len, std::size_t h_len,
                  const char* what) {
    if (x_len != input) {
        throw std::invalid_argument(std::string(what) + ": input length " + std::to_string(x_len) +
                                    ", cell expects " + std::to_string(input));
    }
    if (h_len != hidden) {
        throw std::invalid_argument(std::string(what) + ": hidden state length " +
                                    std::to_string(h_len) + ", cell expects " +
                                    std::to_string(hidden));
    }
}

void assemble_concat(Vector& z, const double* h, std::size_t n, const double* x, std::size_t m) {
    z.resize(n + m);
    for (std::size_t j = 0; j < n; ++j) z[j] = h[j];
    for (std::size_t j = 0; j < m; ++j) z[n + j] = x[j];
}
} // namespace

namespace detail {

void lstm_step(const LSTMParams& p, const double* x, const double* h_prev, const double* c_prev,
               GateTrace& tr) {
    const std::size_t n = p.hidden();
    const std::size_t m = p.input();

    assemble_concat(tr.z, h_prev, n, x, m);
    tr.f.resize(n);
    tr.i.resize(n);
    tr.k.resize(n);
    tr.o.resize(n);
    tr.c.resize(n);
    tr.tanh_c.resize(n);
    tr.h.resize(n);
    tr.c_prev.assign(c_prev, c_prev + n);

    const double* z = tr.z.data();
    matvec_bias(p.w_f, z, p.b_f.data(), tr.f.data());
    matvec_bias(p.w_i, z, p.b_i.data(), tr.i.data());
    matvec_bias(p.w_k, z, p.b_k.data(), tr.k.data());
    matvec_bias(p.w_o, z, p.b_o.data(), tr.o.data());

    for (std::size_t j = 0; j < n; ++j) {
        const double f = sigmoid(tr.f[j]);
        const double i = sigmoid(tr.i[j]);
        const double k = std::tanh(tr.k[j]);
        const double o = sigmoid(tr.o[j]);
        const double c = f * c_prev[j] + i * k;
        const double tc = std::tanh(c);
        tr.f[j] = f;
        tr.i[j] = i;
        tr.k[j] = k;
        tr.o[j] = o;
        tr.c[j] = c;
        tr.tanh_c[j] = tc;
        tr.h[j] = o * tc;
    }
}

void gru_step(const GRUParams& p, const double* x, const double* h_prev, GateTrace& tr) {
    const std::size_t n = p.hidden();
    const std::size_t m = p.input();

    assemble_concat(tr.z, h_prev, n, x, m);
    tr.r.resize(n);
    tr.u.resize(n);
    tr.hbar.resize(n);
    tr.h.resize(n);

    const double* z = tr.z.data();
    matvec_bias(p.w_r, z, p.b_r.data(), tr.r.data());
    matvec_bias(p.w_u, z, p.b_u.data(), tr.u.data());
    for (std::size_t j = 0; j < n; ++j) {
        tr.r[j] = sigmoid(tr.r[j]);
        tr.u[j] = sigmoid(tr.u[j]);
    }

    // candidate input [r*h_prev, x]
    tr.z2.resize(n + m);
    for (std::size_t j = 0; j < n; ++j) tr.z2[j] = tr.r[j] * h_prev[j];
    for (std::size_t j = 0; j < m; ++j) tr.z2[n + j] = x[j];

    matvec_bias(p.w_h, tr.z2.data(), p.b_h.data(), tr.hbar.data());
    for (std::size_t j = 0; j < n; ++j) {
        const double hb = std::tanh(tr.hbar[j]);
        tr.hbar[j] = hb;
        tr.h[j] = (1.0 - tr.u[j]) * h_prev[j] + tr.u[j] * hb;
    }
}

} // namespace detail

std::pair<CellState, GateTrace> lstm_cell_forward(const LSTMParams& p, const Vector& x,
                                                  const CellState& prev) {
    check_shapes(p.hidden(), p.input(), x.size(), prev.h.size(), "lstm_cell_forward");
    if (prev.c.size() != p.hidden()) {
        throw std::invalid_argument("lstm_cell_forward: cell state length " +
                                    std::to_string(prev.c.size()) + ", cell expects " +
                                    std::to_string(p.hidden()));
    }
    GateTrace tr;
    detail::lstm_step(p, x.data(), prev.h.data(), prev.c.data(), tr);
    CellState next{tr.h, tr.c};
    return {std::move(next), std::move(tr)};
}

std::pair<Vector, GateTrace> gru_cell_forward(const GRUParams& p, const Vector& x,
                                              const Vector& prev_h) {
    check_shapes(p.hidden(), p.input(), x.size(), prev_h.size(), "gru_cell_forward");
    GateTrace tr;
    detail::gru_step(p, x.data(), prev_h.data(), tr);
    Vector h = tr.h;
    return {std::move(h), std::move(tr)};
}

} // namespace seqscreen

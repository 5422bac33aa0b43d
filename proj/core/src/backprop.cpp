#include "seqscreen/backprop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace seqscreen {

namespace {

void check_window(const Network& net, const Matrix& window) {
    if (window.rows() != net.seq_len || window.cols() != net.input_width) {
        throw std::invalid_argument(
            "window shape " + std::to_string(window.rows()) + "x" + std::to_string(window.cols()) +
            ", network expects " + std::to_string(net.seq_len) + "x" +
            std::to_string(net.input_width));
    }
}

// Dense hidden layer plus linear output neuron on top of the stage-one
// output v.
double head_forward(const Network& net, const double* v, Vector& dense_pre, Vector& dense_out) {
    const std::size_t n = net.hidden;
    dense_pre.resize(n);
    dense_out.resize(n);
    matvec_bias(net.dense.w, v, net.dense.b.data(), dense_pre.data());
    for (std::size_t j = 0; j < n; ++j) dense_out[j] = activate(net.dense.act, dense_pre[j]);
    double y = net.out.b[0];
    const double* wo = net.out.w.data();
    for (std::size_t j = 0; j < n; ++j) y += wo[j] * dense_out[j];
    return y;
}

void flatten_window(const Matrix& window, Vector& x_flat) {
    x_flat.assign(window.data(), window.data() + window.size());
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

} // namespace

double fnn_forward(const Network& net, const Vector& x) {
    if (net.kind != ModelKind::Fnn) {
        throw std::invalid_argument("fnn_forward: network is not an FNN");
    }
    const auto& first = std::get<DenseParams>(net.stage1);
    if (x.size() != first.w.cols()) {
        throw std::invalid_argument("fnn_forward: input length " + std::to_string(x.size()) +
                                    ", network expects " + std::to_string(first.w.cols()));
    }
    Vector s1(net.hidden);
    matvec_bias(first.w, x.data(), first.b.data(), s1.data());
    for (double& v : s1) v = activate(first.act, v);
    Vector dense_pre, dense_out;
    return head_forward(net, s1.data(), dense_pre, dense_out);
}

void forward_trace(const Network& net, const Matrix& window, ForwardTrace& trace) {
    check_window(net, window);
    const std::size_t n = net.hidden;
    const std::size_t steps = net.seq_len;

    switch (net.kind) {
    case ModelKind::Fnn: {
        const auto& first = std::get<DenseParams>(net.stage1);
        flatten_window(window, trace.x_flat);
        trace.s1_pre.resize(n);
        trace.s1_out.resize(n);
        matvec_bias(first.w, trace.x_flat.data(), first.b.data(), trace.s1_pre.data());
        for (std::size_t j = 0; j < n; ++j) trace.s1_out[j] = activate(first.act, trace.s1_pre[j]);
        trace.steps.clear();
        trace.prediction = head_forward(net, trace.s1_out.data(), trace.dense_pre, trace.dense_out);
        return;
    }
    case ModelKind::Lstm: {
        const auto& p = std::get<LSTMParams>(net.stage1);
        trace.steps.resize(steps);
        // zero initial state at every sequence start
        static thread_local Vector zero;
        zero.assign(n, 0.0);
        const double* h = zero.data();
        const double* c = zero.data();
        for (std::size_t t = 0; t < steps; ++t) {
            detail::lstm_step(p, window.data() + t * net.input_width, h, c, trace.steps[t]);
            h = trace.steps[t].h.data();
            c = trace.steps[t].c.data();
        }
        trace.prediction = head_forward(net, h, trace.dense_pre, trace.dense_out);
        return;
    }
    case ModelKind::Gru: {
        const auto& p = std::get<GRUParams>(net.stage1);
        trace.steps.resize(steps);
        static thread_local Vector zero;
        zero.assign(n, 0.0);
        const double* h = zero.data();
        for (std::size_t t = 0; t < steps; ++t) {
            detail::gru_step(p, window.data() + t * net.input_width, h, trace.steps[t]);
            h = trace.steps[t].h.data();
        }
        trace.prediction = head_forward(net, h, trace.dense_pre, trace.dense_out);
        return;
    }
    }
}

double sequence_forward(const Network& net, const Matrix& window) {
    ForwardTrace trace;
    forward_trace(net, window, trace);
    return trace.prediction;
}

namespace {

void resize_scratch(const Network& net, BpttScratch& s) {
    const std::size_t n = net.hidden;
    const std::size_t w = n + net.input_width;
    s.dh.assign(n, 0.0);
    s.dc.assign(n, 0.0);
    s.dgate_f.assign(n, 0.0);
    s.dgate_i.assign(n, 0.0);
    s.dgate_k.assign(n, 0.0);
    s.dgate_o.assign(n, 0.0);
    s.dz.assign(w, 0.0);
    s.dstage.assign(n, 0.0);
    s.ddense.assign(n, 0.0);
}

// Head backward: from d(prediction) to gradients of the output and
// dense layers, leaving d(stage-one output) in s.dstage.
void head_backward(const Network& net, const ForwardTrace& trace, double dy, Gradients& grads,
                   const double* stage_out, BpttScratch& s) {
    const std::size_t n = net.hidden;

    // output neuron: y = w_out . dense_out + b_out
    double* gwo = grads.out.w.data();
    for (std::size_t j = 0; j < n; ++j) gwo[j] += dy * trace.dense_out[j];
    grads.out.b[0] += dy;

    // dense layer
    const double* wo = net.out.w.data();
    for (std::size_t j = 0; j < n; ++j) {
        const double dd = dy * wo[j];
        s.ddense[j] = dd * activation_grad(net.dense.act, trace.dense_out[j]);
    }
    add_outer(grads.dense.w, s.ddense.data(), stage_out);
    for (std::size_t j = 0; j < n; ++j) grads.dense.b[j] += s.ddense[j];

    s.dstage.assign(n, 0.0);
    tmatvec_acc(net.dense.w, s.ddense.data(), s.dstage.data());
}

void lstm_backward(const Network& net, const LSTMParams& p, LSTMParams& g,
                   const ForwardTrace& trace, BpttScratch& s) {
    const std::size_t n = net.hidden;
    s.dh = s.dstage;
    s.dc.assign(n, 0.0);

    for (std::size_t t = net.seq_len; t-- > 0;) {
        const GateTrace& tr = trace.steps[t];
        for (std::size_t j = 0; j < n; ++j) {
            const double f = tr.f[j], i = tr.i[j], k = tr.k[j], o = tr.o[j];
            const double tc = tr.tanh_c[j];
            const double dho = s.dh[j];
            s.dgate_o[j] = dho * tc * o * (1.0 - o);
            const double dc = s.dc[j] + dho * o * (1.0 - tc * tc);
            s.dgate_f[j] = dc * tr.c_prev[j] * f * (1.0 - f);
            s.dgate_i[j] = dc * k * i * (1.0 - i);
            s.dgate_k[j] = dc * i * (1.0 - k * k);
            s.dc[j] = dc * f; // flows to c_{t-1}
        }

        const double* z = tr.z.data();
        add_outer(g.w_f, s.dgate_f.data(), z);
        add_outer(g.w_i, s.dgate_i.data(), z);
        add_outer(g.w_k, s.dgate_k.data(), z);
        add_outer(g.w_o, s.dgate_o.data(), z);
        for (std::size_t j = 0; j < n; ++j) {
            g.b_f[j] += s.dgate_f[j];
            g.b_i[j] += s.dgate_i[j];
            g.b_k[j] += s.dgate_k[j];
            g.b_o[j] += s.dgate_o[j];
        }

        s.dz.assign(s.dz.size(), 0.0);
        tmatvec_acc(p.w_f, s.dgate_f.data(), s.dz.data());
        tmatvec_acc(p.w_i, s.dgate_i.data(), s.dz.data());
        tmatvec_acc(p.w_k, s.dgate_k.data(), s.dz.data());
        tmatvec_acc(p.w_o, s.dgate_o.data(), s.dz.data());
        for (std::size_t j = 0; j < n; ++j) s.dh[j] = s.dz[j];
    }
}

void gru_backward(const Network& net, const GRUParams& p, GRUParams& g, const ForwardTrace& trace,
                  BpttScratch& s) {
    const std::size_t n = net.hidden;
    s.dh = s.dstage;
    Vector& dz2 = s.dc; // reuse: sized n+input below
    dz2.resize(p.hidden() + p.input());

    for (std::size_t t = net.seq_len; t-- > 0;) {
        const GateTrace& tr = trace.steps[t];
        const double* h_prev = tr.z.data(); // first n entries of [h_prev, x]

        // candidate path
        for (std::size_t j = 0; j < n; ++j) {
            const double u = tr.u[j], hb = tr.hbar[j];
            const double dhj = s.dh[j];
            s.dgate_i[j] = dhj * (hb - h_prev[j]) * u * (1.0 - u);  // update gate delta
            s.dgate_k[j] = dhj * u * (1.0 - hb * hb);               // candidate delta
            s.dgate_o[j] = dhj * (1.0 - u);                         // direct h_prev path
        }

        add_outer(g.w_h, s.dgate_k.data(), tr.z2.data());
        for (std::size_t j = 0; j < n; ++j) g.b_h[j] += s.dgate_k[j];

        dz2.assign(dz2.size(), 0.0);
        tmatvec_acc(p.w_h, s.dgate_k.data(), dz2.data());
        for (std::size_t j = 0; j < n; ++j) {
            const double drh = dz2[j];
            const double r = tr.r[j];
            s.dgate_f[j] = drh * h_prev[j] * r * (1.0 - r); // reset gate delta
            s.dgate_o[j] += drh * r;                        // through r*h_prev
        }

        const double* z = tr.z.data();
        add_outer(g.w_r, s.dgate_f.data(), z);
        add_outer(g.w_u, s.dgate_i.data(), z);
        for (std::size_t j = 0; j < n; ++j) {
            g.b_r[j] += s.dgate_f[j];
            g.b_u[j] += s.dgate_i[j];
        }

        s.dz.assign(s.dz.size(), 0.0);
        tmatvec_acc(p.w_r, s.dgate_f.data(), s.dz.data());
        tmatvec_acc(p.w_u, s.dgate_i.data(), s.dz.data());
        for (std::size_t j = 0; j < n; ++j) s.dh[j] = s.dgate_o[j] + s.dz[j];
    }
}

} // namespace

double backward_accumulate(const Network& net, const Matrix& window, double target,
                           Gradients& grads, ForwardTrace& trace, BpttScratch& scratch) {
    forward_trace(net, window, trace);
    const double diff = trace.prediction - target;
    const double loss = std::abs(diff);
    const double dy = sign_of(diff);
    if (dy == 0.0) return loss; // subgradient 0 at an exact fit

    resize_scratch(net, scratch);
    switch (net.kind) {
    case ModelKind::Fnn: {
        const auto& first = std::get<DenseParams>(net.stage1);
        auto& gfirst = std::get<DenseParams>(grads.stage1);
        head_backward(net, trace, dy, grads, trace.s1_out.data(), scratch);
        for (std::size_t j = 0; j < net.hidden; ++j) {
            scratch.dstage[j] *= activation_grad(first.act, trace.s1_out[j]);
        }
        add_outer(gfirst.w, scratch.dstage.data(), trace.x_flat.data());
        for (std::size_t j = 0; j < net.hidden; ++j) gfirst.b[j] += scratch.dstage[j];
        break;
    }
    case ModelKind::Lstm: {
        const auto& p = std::get<LSTMParams>(net.stage1);
        auto& g = std::get<LSTMParams>(grads.stage1);
        head_backward(net, trace, dy, grads, trace.steps.back().h.data(), scratch);
        lstm_backward(net, p, g, trace, scratch);
        break;
    }
    case ModelKind::Gru: {
        const auto& p = std::get<GRUParams>(net.stage1);
        auto& g = std::get<GRUParams>(grads.stage1);
        head_backward(net, trace, dy, grads, trace.steps.back().h.data(), scratch);
        gru_backward(net, p, g, trace, scratch);
        break;
    }
    }
    return loss;
}

std::pair<double, Gradients> backward(const Network& net, const Matrix& window, double target) {
    Gradients grads = zero_gradients(net);
    ForwardTrace trace;
    BpttScratch scratch;
    const double loss = backward_accumulate(net, window, target, grads, trace, scratch);
    return {loss, std::move(grads)};
}

double gradient_check_against(const Network& net, const Matrix& window, double target,
                              double epsilon, const Gradients& analytic) {
    if (epsilon <= 0.0) throw std::invalid_argument("gradient_check: epsilon must be positive");

    Network probe = net;
    const std::vector<double*> params = parameter_values(probe);
    const std::vector<const double*> grads = parameter_values(analytic);

    // max-norm relative error: the worst per-coordinate deviation is
    // measured against the gradient's overall scale, so coordinates
    // whose true derivative sits below the finite-difference noise
    // floor do not dominate the verdict
    double worst_diff = 0.0;
    double scale = 0.0;
    for (std::size_t idx = 0; idx < params.size(); ++idx) {
        double* p = params[idx];
        const double saved = *p;
        *p = saved + epsilon;
        const double up = std::abs(sequence_forward(probe, window) - target);
        *p = saved - epsilon;
        const double down = std::abs(sequence_forward(probe, window) - target);
        *p = saved;

        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = *grads[idx];
        worst_diff = std::max(worst_diff, std::abs(a - numeric));
        scale = std::max({scale, std::abs(a), std::abs(numeric)});
    }
    return worst_diff / std::max(scale, 1e-12);
}

double gradient_check(const Network& net, const Matrix& window, double target, double epsilon) {
    const auto [loss, grads] = backward(net, window, target);
    (void)loss;
    return gradient_check_against(net, window, target, epsilon, grads);
}

Matrix make_fd_safe_window(const Network& net, SeededRng& rng, double margin) {
    ForwardTrace trace;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Matrix window(net.seq_len, net.input_width);
        for (double& v : window.values()) v = rng.uniform(-1.0, 1.0);
        forward_trace(net, window, trace);

        bool safe = true;
        const auto check_margin = [&](const Vector& pre, ActivationKind act) {
            if (act != ActivationKind::ReLU) return;
            for (const double p : pre) safe = safe && std::abs(p) > margin;
        };
        check_margin(trace.dense_pre, net.dense.act);
        if (net.kind == ModelKind::Fnn) {
            check_margin(trace.s1_pre, std::get<DenseParams>(net.stage1).act);
        }
        if (safe) return window;
    }
    throw std::runtime_error("make_fd_safe_window: no window clears the kink margin");
}

} // namespace seqscreen

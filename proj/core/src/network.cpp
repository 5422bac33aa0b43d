#include "seqscreen/network.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "textio.hpp"

namespace seqscreen {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::Fnn: return "fnn";
    case ModelKind::Lstm: return "lstm";
    case ModelKind::Gru: return "gru";
    }
    return "fnn";
}

ModelKind model_kind_from_string(std::string_view name) {
    if (name == "fnn") return ModelKind::Fnn;
    if (name == "lstm") return ModelKind::Lstm;
    if (name == "gru") return ModelKind::Gru;
    throw std::invalid_argument("unknown model kind: " + std::string(name));
}

namespace {

// Expected trainable-value count: gates are hidden x (hidden + input)
// with one bias each, the FNN first layer replaces the cell with one
// dense layer over the flattened window, and every kind shares the
// dense hidden layer and the single output neuron.
std::size_t expected_param_count(ModelKind kind, std::size_t input_width, std::size_t seq_len,
                                 std::size_t hidden) {
    const std::size_t gate = hidden * (hidden + input_width) + hidden;
    std::size_t stage1 = 0;
    switch (kind) {
    case ModelKind::Fnn: stage1 = hidden * (input_width * seq_len) + hidden; break;
    case ModelKind::Lstm: stage1 = 4 * gate; break;
    case ModelKind::Gru: stage1 = 3 * gate; break;
    }
    return stage1 + (hidden * hidden + hidden) + (hidden + 1);
}

template <typename Stage1, typename Fn>
void visit_tensors(Stage1& stage1, auto& dense, auto& out, Fn&& fn) {
    std::visit(
        [&](auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DenseParams>) {
                fn("w_in", s.w);
                fn("b_in", s.b);
            } else if constexpr (std::is_same_v<T, LSTMParams>) {
                fn("w_f", s.w_f);
                fn("w_i", s.w_i);
                fn("w_k", s.w_k);
                fn("w_o", s.w_o);
                fn("b_f", s.b_f);
                fn("b_i", s.b_i);
                fn("b_k", s.b_k);
                fn("b_o", s.b_o);
            } else {
                fn("w_r", s.w_r);
                fn("w_u", s.w_u);
                fn("w_h", s.w_h);
                fn("b_r", s.b_r);
                fn("b_u", s.b_u);
                fn("b_h", s.b_h);
            }
        },
        stage1);
    fn("w_dense", dense.w);
    fn("b_dense", dense.b);
    fn("w_out", out.w);
    fn("b_out", out.b);
}

template <typename NetOrGrads, typename Ptr>
std::vector<Ptr> collect_values(NetOrGrads& n) {
    std::vector<Ptr> ptrs;
    visit_tensors(n.stage1, n.dense, n.out, [&](std::string_view, auto& tensor) {
        using T = std::decay_t<decltype(tensor)>;
        if constexpr (std::is_same_v<T, Matrix> || std::is_same_v<std::remove_const_t<T>, Matrix>) {
            for (auto& v : tensor.values()) ptrs.push_back(&v);
        } else {
            for (auto& v : tensor) ptrs.push_back(&v);
        }
    });
    return ptrs;
}

} // namespace

Network make_network(ModelKind kind, std::size_t input_width, std::size_t seq_len,
                     std::size_t hidden, ActivationKind dense_act, SeededRng& rng) {
    if (input_width == 0 || seq_len == 0 || hidden == 0) {
        throw std::invalid_argument("make_network: sizes must be at least 1");
    }
    Network net;
    net.kind = kind;
    net.input_width = input_width;
    net.seq_len = seq_len;
    net.hidden = hidden;

    const std::size_t cell_in = hidden + input_width;
    switch (kind) {
    case ModelKind::Fnn: {
        DenseParams first;
        first.w = glorot_uniform(input_width * seq_len, hidden, rng);
        first.b = Vector(hidden, 0.0);
        first.act = dense_act;
        net.stage1 = std::move(first);
        break;
    }
    case ModelKind::Lstm: {
        LSTMParams p;
        p.w_f = glorot_uniform(cell_in, hidden, rng);
        p.w_i = glorot_uniform(cell_in, hidden, rng);
        p.w_k = glorot_uniform(cell_in, hidden, rng);
        p.w_o = glorot_uniform(cell_in, hidden, rng);
        p.b_f = Vector(hidden, 0.0);
        p.b_i = Vector(hidden, 0.0);
        p.b_k = Vector(hidden, 0.0);
        p.b_o = Vector(hidden, 0.0);
        net.stage1 = std::move(p);
        break;
    }
    case ModelKind::Gru: {
        GRUParams p;
        p.w_r = glorot_uniform(cell_in, hidden, rng);
        p.w_u = glorot_uniform(cell_in, hidden, rng);
        p.w_h = glorot_uniform(cell_in, hidden, rng);
        p.b_r = Vector(hidden, 0.0);
        p.b_u = Vector(hidden, 0.0);
        p.b_h = Vector(hidden, 0.0);
        net.stage1 = std::move(p);
        break;
    }
    }

    net.dense.w = glorot_uniform(hidden, hidden, rng);
    net.dense.b = Vector(hidden, 0.0);
    net.dense.act = dense_act;
    net.out.w = glorot_uniform(hidden, 1, rng);
    net.out.b = Vector(1, 0.0);
    net.out.act = ActivationKind::Identity;

    if (param_count(net) != expected_param_count(kind, input_width, seq_len, hidden)) {
        throw std::logic_error("make_network: parameter count mismatch");
    }
    return net;
}

Gradients zero_gradients(const Network& net) {
    Gradients g;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DenseParams>) {
                DenseParams z;
                z.w = Matrix(s.w.rows(), s.w.cols());
                z.b = Vector(s.b.size(), 0.0);
                g.stage1 = std::move(z);
            } else if constexpr (std::is_same_v<T, LSTMParams>) {
                LSTMParams z;
                z.w_f = Matrix(s.w_f.rows(), s.w_f.cols());
                z.w_i = Matrix(s.w_i.rows(), s.w_i.cols());
                z.w_k = Matrix(s.w_k.rows(), s.w_k.cols());
                z.w_o = Matrix(s.w_o.rows(), s.w_o.cols());
                z.b_f = Vector(s.b_f.size(), 0.0);
                z.b_i = Vector(s.b_i.size(), 0.0);
                z.b_k = Vector(s.b_k.size(), 0.0);
                z.b_o = Vector(s.b_o.size(), 0.0);
                g.stage1 = std::move(z);
            } else {
                GRUParams z;
                z.w_r = Matrix(s.w_r.rows(), s.w_r.cols());
                z.w_u = Matrix(s.w_u.rows(), s.w_u.cols());
                z.w_h = Matrix(s.w_h.rows(), s.w_h.cols());
                z.b_r = Vector(s.b_r.size(), 0.0);
                z.b_u = Vector(s.b_u.size(), 0.0);
                z.b_h = Vector(s.b_h.size(), 0.0);
                g.stage1 = std::move(z);
            }
        },
        net.stage1);
    g.dense.w = Matrix(net.dense.w.rows(), net.dense.w.cols());
    g.dense.b = Vector(net.dense.b.size(), 0.0);
    g.out.w = Matrix(net.out.w.rows(), net.out.w.cols());
    g.out.b = Vector(net.out.b.size(), 0.0);
    return g;
}

std::size_t param_count(const Network& net) {
    std::size_t count = 0;
    visit_tensors(net.stage1, net.dense, net.out, [&](std::string_view, const auto& tensor) {
        count += tensor.size();
    });
    return count;
}

std::vector<double*> parameter_values(Network& net) { return collect_values<Network, double*>(net); }

std::vector<const double*> parameter_values(const Network& net) {
    return collect_values<const Network, const double*>(net);
}

std::vector<double*> parameter_values(Gradients& grads) {
    return collect_values<Gradients, double*>(grads);
}

std::vector<const double*> parameter_values(const Gradients& grads) {
    return collect_values<const Gradients, const double*>(grads);
}

void scale_gradients(Gradients& grads, double factor) {
    visit_tensors(grads.stage1, grads.dense, grads.out, [&](std::string_view, auto& tensor) {
        if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, Matrix>) {
            for (double& v : tensor.values()) v *= factor;
        } else {
            for (double& v : tensor) v *= factor;
        }
    });
}

namespace {
constexpr std::string_view kModelMagic = "seqscreen model v1";

void write_tensor(std::ostream& os, std::string_view name, const Matrix& m) {
    os << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) os << ' ';
            os << textio::format_g17(m(r, c));
        }
        os << '\n';
    }
}

void write_tensor(std::ostream& os, std::string_view name, const Vector& v) {
    os << "tensor " << name << " 1 " << v.size() << '\n';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ' ';
        os << textio::format_g17(v[i]);
    }
    os << '\n';
}
} // namespace

void save_network(const Network& net, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open model file for writing: " + path.string());
    os << kModelMagic << '\n';
    os << "kind " << to_string(net.kind) << '\n';
    os << "input_width " << net.input_width << '\n';
    os << "seq_len " << net.seq_len << '\n';
    os << "hidden " << net.hidden << '\n';
    os << "dense_activation " << to_string(net.dense.act) << '\n';
    visit_tensors(net.stage1, net.dense, net.out,
                  [&](std::string_view name, const auto& tensor) { write_tensor(os, name, tensor); });
    os << "end\n";
    if (!os) throw std::runtime_error("failed writing model file: " + path.string());
}

namespace {
class LineReader {
public:
    explicit LineReader(std::istream& is, const std::string& origin) : is_(is), origin_(origin) {}

    std::string next() {
        std::string line;
        if (!std::getline(is_, line)) fail("unexpected end of file");
        ++lineno_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error(origin_ + ":" + std::to_string(lineno_ + 1) + ": " + what);
    }

private:
    std::istream& is_;
    std::string origin_;
    std::size_t lineno_ = 0;
};

std::string expect_kv(LineReader& reader, std::string_view key) {
    const std::string line = reader.next();
    const auto pos = line.find(' ');
    if (pos == std::string::npos || std::string_view(line).substr(0, pos) != key) {
        reader.fail("expected '" + std::string(key) + " <value>', got '" + line + "'");
    }
    return line.substr(pos + 1);
}

void read_tensor_into(LineReader& reader, std::string_view name, Matrix& m,
                      std::size_t rows, std::size_t cols) {
    const std::string header = reader.next();
    std::ostringstream expected;
    expected << "tensor " << name << ' ' << rows << ' ' << cols;
    if (header != expected.str()) {
        reader.fail("expected '" + expected.str() + "', got '" + header + "'");
    }
    m = Matrix(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string line = reader.next();
        const auto fields = textio::split(line, ' ');
        if (fields.size() != cols) reader.fail("wrong value count in tensor row");
        for (std::size_t c = 0; c < cols; ++c) {
            const auto v = textio::parse_double(fields[c]);
            if (!v) reader.fail("bad numeric value in tensor row");
            m(r, c) = *v;
        }
    }
}

void read_tensor_into(LineReader& reader, std::string_view name, Vector& v, std::size_t len) {
    Matrix m;
    read_tensor_into(reader, name, m, 1, len);
    v.assign(m.data(), m.data() + len);
}
} // namespace

Network load_network(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open model file: " + path.string());
    LineReader reader(is, path.string());

    if (reader.next() != kModelMagic) reader.fail("not a seqscreen v1 model file");
    const ModelKind kind = model_kind_from_string(expect_kv(reader, "kind"));
    const auto input_width = textio::parse_int(expect_kv(reader, "input_width"));
    const auto seq_len = textio::parse_int(expect_kv(reader, "seq_len"));
    const auto hidden = textio::parse_int(expect_kv(reader, "hidden"));
    const ActivationKind act = activation_from_string(expect_kv(reader, "dense_activation"));
    if (!input_width || !seq_len || !hidden || *input_width < 1 || *seq_len < 1 || *hidden < 1) {
        reader.fail("bad size header");
    }

    // Build a zero-weight network of the right shape, then fill tensors
    // in file order.
    SeededRng scratch_rng(0);
    Network net = make_network(kind, static_cast<std::size_t>(*input_width),
                               static_cast<std::size_t>(*seq_len),
                               static_cast<std::size_t>(*hidden), act, scratch_rng);

    visit_tensors(net.stage1, net.dense, net.out, [&](std::string_view name, auto& tensor) {
        using T = std::decay_t<decltype(tensor)>;
        if constexpr (std::is_same_v<T, Matrix>) {
            read_tensor_into(reader, name, tensor, tensor.rows(), tensor.cols());
        } else {
            read_tensor_into(reader, name, tensor, tensor.size());
        }
    });
    if (reader.next() != "end") reader.fail("expected 'end'");
    return net;
}

} // namespace seqscreen

#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace seqscreen {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Everything in the engine is small
// (at most a few hundred rows/columns), so there is no blocking or
// sparsity, just contiguous storage and tight inner loops.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::size_t rows, std::size_t cols, Vector values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        assert(data_.size() == rows_ * cols_);
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
        std::size_t r = 0;
        for (const auto& row : rows) {
            assert(row.size() == m.cols_);
            std::size_t c = 0;
            for (double v : row) m(r, c++) = v;
            ++r;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::span<double> row(std::size_t r) {
        assert(r < rows_);
        return {data_.data() + r * cols_, cols_};
    }
    std::span<const double> row(std::size_t r) const {
        assert(r < rows_);
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> values() { return {data_.data(), data_.size()}; }
    std::span<const double> values() const { return {data_.data(), data_.size()}; }

    void fill(double v) { data_.assign(data_.size(), v); }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

// y = A.x. The dot product is split over eight accumulators; the fixed
// combination order keeps results bit-reproducible run to run while
// letting the compiler vectorize each partial chain.
inline void matvec(const Matrix& a, const double* x, double* y) {
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    const double* w = a.data();
    for (std::size_t i = 0; i < rows; ++i) {
        const double* r = w + i * cols;
        double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
        std::size_t j = 0;
        for (; j + 8 <= cols; j += 8) {
            s0 += r[j] * x[j];
            s1 += r[j + 1] * x[j + 1];
            s2 += r[j + 2] * x[j + 2];
            s3 += r[j + 3] * x[j + 3];
            s4 += r[j + 4] * x[j + 4];
            s5 += r[j + 5] * x[j + 5];
            s6 += r[j + 6] * x[j + 6];
            s7 += r[j + 7] * x[j + 7];
        }
        double s = ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
        for (; j < cols; ++j) s += r[j] * x[j];
        y[i] = s;
    }
}

// y = A.x + b
inline void matvec_bias(const Matrix& a, const double* x, const double* b, double* y) {
    matvec(a, x, y);
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] += b[i];
}

// A += u.v^T
inline void add_outer(Matrix& a, const double* u, const double* v) {
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    double* w = a.data();
    for (std::size_t i = 0; i < rows; ++i) {
        const double ui = u[i];
        double* r = w + i * cols;
        for (std::size_t j = 0; j < cols; ++j) r[j] += ui * v[j];
    }
}

// y += A^T.u, looped row-wise so the inner loop stays contiguous.
inline void tmatvec_acc(const Matrix& a, const double* u, double* y) {
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    const double* w = a.data();
    for (std::size_t i = 0; i < rows; ++i) {
        const double ui = u[i];
        const double* r = w + i * cols;
        for (std::size_t j = 0; j < cols; ++j) y[j] += ui * r[j];
    }
}

// Standard matrix product. Rejects non-conforming shapes.
Matrix matmul(const Matrix& a, const Matrix& b);

// [h, x]: h entries first, then x entries. The recurrent cells rely on
// this ordering; the left block of every gate weight matrix multiplies
// the previous hidden state.
Vector concat(const Vector& h, const Vector& x);

} // namespace seqscreen

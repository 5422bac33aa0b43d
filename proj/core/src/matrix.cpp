#include "seqscreen/matrix.hpp"

#include <stdexcept>
#include <string>

namespace seqscreen {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: dimension mismatch, left is " +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    ", right is " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()));
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.data() + i * c.cols();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const double* bk = b.data() + k * b.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Vector concat(const Vector& h, const Vector& x) {
    Vector out;
    out.reserve(h.size() + x.size());
    out.insert(out.end(), h.begin(), h.end());
    out.insert(out.end(), x.begin(), x.end());
    return out;
}

} // namespace seqscreen

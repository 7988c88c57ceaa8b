#include "cogscreen/attention/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cogscreen/error.hpp"
#include "cogscreen/kernels/kernels.hpp"

namespace cogscreen::attention {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw DataError("matrix: " + std::to_string(data_.size()) + " values for shape " +
                        std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (double v : data_) {
        if (!std::isfinite(v)) throw DataError("matrix: non-finite entry");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    }
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DataError("matmul: shapes " + shape(a) + " and " + shape(b) + " do not compose");
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double s = a(i, k);
            if (s != 0.0) kernels::axpy(s, b.row(k), out);
        }
    }
    return c;
}

std::vector<double> softmax(std::span<const double> z) {
    if (z.empty()) throw DataError("softmax of an empty vector");
    for (double v : z) {
        if (!std::isfinite(v)) throw DataError("softmax: non-finite input");
    }
    const double mx = *std::max_element(z.begin(), z.end());
    std::vector<double> out(z.size());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - mx);
        total += out[i];
    }
    for (auto& v : out) v /= total;
    return out;
}

Matrix attention_weights(const Matrix& q, const Matrix& k) {
    if (q.cols() == 0) throw DataError("attention: d_k must be positive");
    if (q.cols() != k.cols()) {
        throw DataError("attention: Q is " + shape(q) + " but K is " + shape(k));
    }
    if (k.rows() == 0) throw DataError("attention: no keys");
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Matrix w(q.rows(), k.rows());
    std::vector<double> logits(k.rows());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        for (std::size_t j = 0; j < k.rows(); ++j) logits[j] = kernels::dot(q.row(i), k.row(j)) * scale;
        const auto p = softmax(logits);
        std::copy(p.begin(), p.end(), w.row(i).begin());
    }
    return w;
}

Matrix scaled_dot_product_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
    if (k.rows() != v.rows()) {
        throw DataError("attention: K is " + shape(k) + " but V is " + shape(v));
    }
    return matmul(attention_weights(q, k), v);
}

void MultiHeadConfig::validate() const {
    if (heads.empty()) throw DataError("multi-head attention needs at least one head");
    if (d_model == 0 || d_k == 0 || d_v == 0) {
        throw DataError("multi-head attention: dimensions must be positive");
    }
    const auto expect = [](const Matrix& m, std::size_t r, std::size_t c, const char* what) {
        if (m.rows() != r || m.cols() != c) {
            throw DataError(std::string("multi-head attention: ") + what + " is " + shape(m) +
                            ", expected " + std::to_string(r) + "x" + std::to_string(c));
        }
    };
    for (const auto& hp : heads) {
        expect(hp.wq, d_model, d_k, "W^Q");
        expect(hp.wk, d_model, d_k, "W^K");
        expect(hp.wv, d_model, d_v, "W^V");
    }
    expect(wo, heads.size() * d_v, d_model, "W_O");
}

Matrix multi_head_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                            const MultiHeadConfig& cfg) {
    cfg.validate();
    for (const Matrix* m : {&q, &k, &v}) {
        if (m->cols() != cfg.d_model) {
            throw DataError("multi-head attention: input is " + shape(*m) + ", expected d_model " +
                            std::to_string(cfg.d_model) + " columns");
        }
    }
    Matrix concat(q.rows(), cfg.h() * cfg.d_v);
    for (std::size_t h = 0; h < cfg.h(); ++h) {
        const auto& hp = cfg.heads[h];
        const Matrix head =
            scaled_dot_product_attention(matmul(q, hp.wq), matmul(k, hp.wk), matmul(v, hp.wv));
        for (std::size_t i = 0; i < head.rows(); ++i) {
            std::copy(head.row(i).begin(), head.row(i).end(),
                      concat.row(i).begin() + static_cast<std::ptrdiff_t>(h * cfg.d_v));
        }
    }
    return matmul(concat, cfg.wo);
}

}  // namespace cogscreen::attention

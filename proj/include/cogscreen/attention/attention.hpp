#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cogscreen::attention {

/// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    /// Throws DataError unless values.size() == rows * cols and all entries are finite.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    const std::vector<double>& values() const { return data_; }

    Matrix transpose() const;
    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// A (n x k) times B (k x m); throws DataError on inner-dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

/// exp(z_i - max z) / sum_j exp(z_j - max z). Throws DataError on empty or non-finite input.
std::vector<double> softmax(std::span<const double> z);

/// Row-wise softmax(Q K^T / sqrt(d_k)); n x m.
Matrix attention_weights(const Matrix& q, const Matrix& k);

/// softmax(Q K^T / sqrt(d_k)) V. Q is n x d_k, K is m x d_k, V is m x d_v.
Matrix scaled_dot_product_attention(const Matrix& q, const Matrix& k, const Matrix& v);

struct HeadProjection {
    Matrix wq;  // d_model x d_k
    Matrix wk;  // d_model x d_k
    Matrix wv;  // d_model x d_v
};

struct MultiHeadConfig {
    std::size_t d_model = 0;
    std::size_t d_k = 0;
    std::size_t d_v = 0;
    std::vector<HeadProjection> heads;
    Matrix wo;  // (h * d_v) x d_model

    std::size_t h() const { return heads.size(); }
    /// Throws DataError when any projection shape disagrees with the dimensions.
    void validate() const;
};

/// Concat(head_1..head_h) W_O with head_i = attention(Q W_i^Q, K W_i^K, V W_i^V).
Matrix multi_head_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                            const MultiHeadConfig& cfg);

}  // namespace cogscreen::attention

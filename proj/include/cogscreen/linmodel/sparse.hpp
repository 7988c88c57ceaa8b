#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace cogscreen::linmodel {

/// Sorted (index, value) pairs with strictly increasing indices and no explicit zeros.
struct SparseVector {
    std::size_t dimension = 0;
    std::vector<std::uint32_t> indices;
    std::vector<double> values;

    std::size_t nnz() const { return indices.size(); }
    double at(std::size_t index) const;
    bool valid() const;

    /// Builds from unsorted pairs; duplicate indices are summed and zeros dropped.
    static SparseVector from_pairs(std::size_t dimension,
                                   std::vector<std::pair<std::uint32_t, double>> pairs);
    static SparseVector from_dense(std::span<const double> dense);
};

/// Compressed sparse row design matrix.
class CsrMatrix {
public:
    CsrMatrix() = default;
    explicit CsrMatrix(std::size_t cols) : cols_(cols) {}

    static CsrMatrix from_rows(const std::vector<SparseVector>& rows, std::size_t cols);
    static CsrMatrix from_dense(const std::vector<std::vector<double>>& rows, std::size_t cols);

    void append_row(const SparseVector& row);

    std::size_t rows() const { return row_ptr_.size() - 1; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const std::uint32_t> row_indices(std::size_t r) const {
        return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }

    /// Dense copy of column j (rows() entries).
    std::vector<double> column(std::size_t j) const;

    /// Keeps columns where mask is true, renumbered densely in order.
    CsrMatrix select_columns(const std::vector<bool>& mask) const;

    /// Copy with column j multiplied by scale[j].
    CsrMatrix scale_columns(std::span<const double> scale) const;
    /// Mean over rows of x_ij^2, per column.
    std::vector<double> column_mean_squares() const;

    bool all_finite() const;

private:
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::uint32_t> col_idx_;
    std::vector<double> values_;
};

}  // namespace cogscreen::linmodel

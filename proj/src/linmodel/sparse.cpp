#include "cogscreen/linmodel/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "cogscreen/error.hpp"

namespace cogscreen::linmodel {

double SparseVector::at(std::size_t index) const {
    auto it = std::lower_bound(indices.begin(), indices.end(), index);
    if (it == indices.end() || *it != index) return 0.0;
    return values[static_cast<std::size_t>(it - indices.begin())];
}

bool SparseVector::valid() const {
    if (indices.size() != values.size()) return false;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= dimension || values[k] == 0.0) return false;
        if (k > 0 && indices[k] <= indices[k - 1]) return false;
    }
    return true;
}

SparseVector SparseVector::from_pairs(std::size_t dimension,
                                      std::vector<std::pair<std::uint32_t, double>> pairs) {
    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    SparseVector v;
    v.dimension = dimension;
    for (const auto& [i, x] : pairs) {
        if (i >= dimension) throw UsageError("sparse index out of range");
        if (!v.indices.empty() && v.indices.back() == i) {
            v.values.back() += x;
        } else {
            v.indices.push_back(i);
            v.values.push_back(x);
        }
    }
    std::size_t w = 0;
    for (std::size_t k = 0; k < v.indices.size(); ++k) {
        if (v.values[k] == 0.0) continue;
        v.indices[w] = v.indices[k];
        v.values[w] = v.values[k];
        ++w;
    }
    v.indices.resize(w);
    v.values.resize(w);
    return v;
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
    SparseVector v;
    v.dimension = dense.size();
    for (std::size_t i = 0; i < dense.size(); ++i) {
        if (dense[i] != 0.0) {
            v.indices.push_back(static_cast<std::uint32_t>(i));
            v.values.push_back(dense[i]);
        }
    }
    return v;
}

CsrMatrix CsrMatrix::from_rows(const std::vector<SparseVector>& rows, std::size_t cols) {
    CsrMatrix m(cols);
    for (const auto& r : rows) m.append_row(r);
    return m;
}

CsrMatrix CsrMatrix::from_dense(const std::vector<std::vector<double>>& rows, std::size_t cols) {
    CsrMatrix m(cols);
    for (const auto& r : rows) {
        if (r.size() != cols) throw UsageError("dense row has wrong width");
        m.append_row(SparseVector::from_dense(r));
    }
    return m;
}

void CsrMatrix::append_row(const SparseVector& row) {
    if (row.dimension != cols_) throw UsageError("row dimension does not match matrix");
    col_idx_.insert(col_idx_.end(), row.indices.begin(), row.indices.end());
    values_.insert(values_.end(), row.values.begin(), row.values.end());
    row_ptr_.push_back(values_.size());
}

std::vector<double> CsrMatrix::column(std::size_t j) const {
    std::vector<double> col(rows(), 0.0);
    for (std::size_t r = 0; r < rows(); ++r) {
        const auto idx = row_indices(r);
        auto it = std::lower_bound(idx.begin(), idx.end(), j);
        if (it != idx.end() && *it == j) col[r] = row_values(r)[static_cast<std::size_t>(it - idx.begin())];
    }
    return col;
}

CsrMatrix CsrMatrix::select_columns(const std::vector<bool>& mask) const {
    if (mask.size() != cols_) throw UsageError("column mask has wrong size");
    std::vector<std::int64_t> remap(cols_, -1);
    std::size_t kept = 0;
    for (std::size_t j = 0; j < cols_; ++j) {
        if (mask[j]) remap[j] = static_cast<std::int64_t>(kept++);
    }
    CsrMatrix out(kept);
    out.row_ptr_.reserve(row_ptr_.size());
    for (std::size_t r = 0; r < rows(); ++r) {
        const auto idx = row_indices(r);
        const auto val = row_values(r);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto nj = remap[idx[k]];
            if (nj >= 0) {
                out.col_idx_.push_back(static_cast<std::uint32_t>(nj));
                out.values_.push_back(val[k]);
            }
        }
        out.row_ptr_.push_back(out.values_.size());
    }
    return out;
}

CsrMatrix CsrMatrix::scale_columns(std::span<const double> scale) const {
    if (scale.size() != cols_) throw UsageError("column scale has wrong size");
    CsrMatrix out = *this;
    for (std::size_t k = 0; k < out.values_.size(); ++k) out.values_[k] *= scale[col_idx_[k]];
    return out;
}

std::vector<double> CsrMatrix::column_mean_squares() const {
    std::vector<double> ms(cols_, 0.0);
    for (std::size_t k = 0; k < values_.size(); ++k) ms[col_idx_[k]] += values_[k] * values_[k];
    if (rows() > 0) {
        for (auto& v : ms) v /= static_cast<double>(rows());
    }
    return ms;
}

bool CsrMatrix::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace cogscreen::linmodel

#include "cogscreen/linmodel/stats.hpp"

#include <algorithm>
#include <cmath>

#include "cogscreen/error.hpp"

namespace cogscreen::linmodel {

double pcc(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("pcc: inputs differ in length");
    if (x.size() < 2) throw DataError("pcc: need at least two points");
    const auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    if (constant(x) || constant(y)) {
        throw DataError("pcc: correlation undefined for constant input");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("pcc: correlation undefined for constant input");
    const double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
    return std::clamp(r, -1.0, 1.0);
}

std::vector<std::optional<double>> column_pcc(const CsrMatrix& X, std::span<const double> y) {
    const std::size_t m = X.rows();
    if (y.size() != m) throw DataError("column_pcc: label length mismatch");
    std::vector<std::optional<double>> out(X.cols());
    if (m < 2) return out;

    double my = 0.0;
    for (double v : y) my += v;
    my /= static_cast<double>(m);
    double syy = 0.0;
    for (double v : y) syy += (v - my) * (v - my);
    if (syy == 0.0) return out;

    // Two passes over the non-zeros: column means, then centered sums. Zero
    // entries contribute (0 - mean) terms that are added in closed form.
    std::vector<double> sum(X.cols(), 0.0);
    std::vector<std::size_t> nnz(X.cols(), 0);
    std::vector<double> lo(X.cols(), INFINITY), hi(X.cols(), -INFINITY);
    for (std::size_t r = 0; r < m; ++r) {
        const auto idx = X.row_indices(r);
        const auto val = X.row_values(r);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            sum[idx[k]] += val[k];
            ++nnz[idx[k]];
            lo[idx[k]] = std::min(lo[idx[k]], val[k]);
            hi[idx[k]] = std::max(hi[idx[k]], val[k]);
        }
    }
    std::vector<double> mean(X.cols());
    for (std::size_t j = 0; j < X.cols(); ++j) mean[j] = sum[j] / static_cast<double>(m);

    std::vector<double> sxx(X.cols(), 0.0), sxy(X.cols(), 0.0);
    double sum_dy = 0.0;
    for (double v : y) sum_dy += v - my;
    std::vector<double> nz_dy(X.cols(), 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const auto idx = X.row_indices(r);
        const auto val = X.row_values(r);
        const double dy = y[r] - my;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double dx = val[k] - mean[idx[k]];
            sxx[idx[k]] += dx * dx;
            sxy[idx[k]] += dx * dy;
            nz_dy[idx[k]] += dy;
        }
    }
    for (std::size_t j = 0; j < X.cols(); ++j) {
        const double zeros = static_cast<double>(m - nnz[j]);
        const double vx = sxx[j] + zeros * mean[j] * mean[j];
        const double cxy = sxy[j] - mean[j] * (sum_dy - nz_dy[j]);
        const bool constant = nnz[j] == 0 || (nnz[j] == m ? lo[j] == hi[j]
                                                          : lo[j] == 0.0 && hi[j] == 0.0);
        if (constant || vx <= 0.0) continue;
        out[j] = std::clamp(cxy / (std::sqrt(vx) * std::sqrt(syy)), -1.0, 1.0);
    }
    return out;
}

std::vector<bool> mask_from_pcc(const std::vector<std::optional<double>>& pccs, double threshold) {
    if (threshold < 0.0) throw UsageError("pcc threshold must be >= 0");
    std::vector<bool> mask(pccs.size(), false);
    for (std::size_t j = 0; j < pccs.size(); ++j) {
        mask[j] = pccs[j].has_value() && std::abs(*pccs[j]) >= threshold;
    }
    return mask;
}

std::vector<bool> select_features(const CsrMatrix& X, std::span<const double> y, double threshold) {
    return mask_from_pcc(column_pcc(X, y), threshold);
}

}  // namespace cogscreen::linmodel

#include <cmath>

#include "cogscreen/kernels/kernels.hpp"

namespace cogscreen::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sparse_dot_scalar(const std::uint32_t* idx, const double* val, std::size_t nnz,
                         const double* dense) {
    double s = 0.0;
    for (std::size_t k = 0; k < nnz; ++k) s += val[k] * dense[idx[k]];
    return s;
}

void soft_threshold_scalar(double* x, std::size_t n, double t) {
    for (std::size_t i = 0; i < n; ++i) {
        const double mag = std::abs(x[i]) - t;
        x[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
    }
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void extrapolate_scalar(const double* a, const double* b, double scale, double* out,
                        std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + scale * (a[i] - b[i]);
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{dot_scalar,           axpy_scalar,
                                   sparse_dot_scalar,    soft_threshold_scalar,
                                   max_abs_diff_scalar,  extrapolate_scalar};
    return table;
}

}  // namespace cogscreen::kernels

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Double-precision inner loops shared by the linear models and the attention
// math. Each kernel has a portable scalar reference and an AVX2 variant; the
// variant is chosen once at startup from CPUID, overridable with the
// COGSCREEN_ISA environment variable ("scalar" or "avx2").

namespace cogscreen::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // sum_k val[k] * dense[idx[k]]
    double (*sparse_dot)(const std::uint32_t* idx, const double* val, std::size_t nnz,
                         const double* dense);
    // x[i] = sign(x[i]) * max(|x[i]| - t, 0)
    void (*soft_threshold)(double* x, std::size_t n, double t);
    double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
    // out[i] = a[i] + scale * (a[i] - b[i])
    void (*extrapolate)(const double* a, const double* b, double scale, double* out,
                        std::size_t n);
};

const KernelTable& scalar_table();
/// Only valid when avx2_supported() is true.
const KernelTable& avx2_table();

bool avx2_supported();
Isa active_isa();
std::string_view isa_name(Isa isa);
const KernelTable& table_for(Isa isa);
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double sparse_dot(std::span<const std::uint32_t> idx, std::span<const double> val,
                         std::span<const double> dense) {
    return active().sparse_dot(idx.data(), val.data(), idx.size(), dense.data());
}
inline void soft_threshold(std::span<double> x, double t) {
    active().soft_threshold(x.data(), x.size(), t);
}
inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    return active().max_abs_diff(a.data(), b.data(), a.size());
}
inline void extrapolate(std::span<const double> a, std::span<const double> b, double scale,
                        std::span<double> out) {
    active().extrapolate(a.data(), b.data(), scale, out.data(), a.size());
}

}  // namespace cogscreen::kernels

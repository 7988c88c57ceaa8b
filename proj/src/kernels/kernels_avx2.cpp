// Compiled with -mavx2 (see src/CMakeLists.txt). Nothing in here may run
// unless avx2_supported() returned true.

#include <immintrin.h>

#include <cmath>

#include "cogscreen/kernels/kernels.hpp"

namespace cogscreen::kernels {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        acc1 = _mm256_add_pd(acc1,
                             _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double sparse_dot_avx2(const std::uint32_t* idx, const double* val, std::size_t nnz,
                       const double* dense) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= nnz; k += 4) {
        const __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k));
        // Indices are < 2^31 (column counts fit in int32), so a signed gather is safe.
        const __m256d g = _mm256_i32gather_pd(dense, vi, 8);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(val + k), g));
    }
    double s = hsum(acc);
    for (; k < nnz; ++k) s += val[k] * dense[idx[k]];
    return s;
}

void soft_threshold_avx2(double* x, std::size_t n, double t) {
    const __m256d vt = _mm256_set1_pd(t);
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d sign = _mm256_and_pd(v, sign_mask);
        const __m256d mag = _mm256_max_pd(_mm256_sub_pd(_mm256_andnot_pd(sign_mask, v), vt), zero);
        // mag is +0 where shrunk out; or-ing the sign would give -0, so mask it.
        const __m256d keep = _mm256_cmp_pd(mag, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(x + i, _mm256_and_pd(_mm256_or_pd(mag, sign), keep));
    }
    for (; i < n; ++i) {
        const double mag = std::abs(x[i]) - t;
        x[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
    }
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d m = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        m = _mm256_max_pd(m, _mm256_andnot_pd(sign_mask, d));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, m);
    double r = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    for (; i < n; ++i) r = std::max(r, std::abs(a[i] - b[i]));
    return r;
}

void extrapolate_avx2(const double* a, const double* b, double scale, double* out,
                      std::size_t n) {
    const __m256d vs = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d d = _mm256_sub_pd(va, _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(va, _mm256_mul_pd(vs, d)));
    }
    for (; i < n; ++i) out[i] = a[i] + scale * (a[i] - b[i]);
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{dot_avx2,          axpy_avx2,         sparse_dot_avx2,
                                   soft_threshold_avx2, max_abs_diff_avx2, extrapolate_avx2};
    return table;
}

}  // namespace cogscreen::kernels

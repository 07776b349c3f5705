// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "medlit/simd/kernels.hpp"

namespace medlit::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot_f64(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double dot_f64_f32(const double* a, const float* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 bf = _mm256_loadu_ps(b + i);
        const __m256d b0 = _mm256_cvtps_pd(_mm256_castps256_ps128(bf));
        const __m256d b1 = _mm256_cvtps_pd(_mm256_extractf128_ps(bf, 1));
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), b0, acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), b1, acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * static_cast<double>(b[i]);
    return s;
}

double sum_squares_f64(const double* a, std::size_t n) {
    return dot_f64(a, a, n);
}

double sum_squares_f32(const float* a, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 af = _mm256_loadu_ps(a + i);
        const __m256d a0 = _mm256_cvtps_pd(_mm256_castps256_ps128(af));
        const __m256d a1 = _mm256_cvtps_pd(_mm256_extractf128_ps(af, 1));
        acc0 = _mm256_fmadd_pd(a0, a0, acc0);
        acc1 = _mm256_fmadd_pd(a1, a1, acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double v = a[i];
        s += v * v;
    }
    return s;
}

}  // namespace medlit::simd::avx2

#include "medlit/simd/kernels.hpp"

namespace medlit::simd::scalar {

double dot_f64(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double dot_f64_f32(const double* a, const float* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * static_cast<double>(b[i]);
    return s;
}

double sum_squares_f64(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

double sum_squares_f32(const float* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = a[i];
        s += v * v;
    }
    return s;
}

}  // namespace medlit::simd::scalar

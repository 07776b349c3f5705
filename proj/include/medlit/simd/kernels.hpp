#pragma once

#include <cstddef>
#include <string_view>

// Dense-vector kernels used by cosine scoring. Every variant accumulates in
// double precision; the vectorized variants differ from the scalar reference
// only in summation order.
namespace medlit::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
    Isa isa;
    double (*dot_f64)(const double* a, const double* b, std::size_t n);
    double (*dot_f64_f32)(const double* a, const float* b, std::size_t n);
    double (*sum_squares_f64)(const double* a, std::size_t n);
    double (*sum_squares_f32)(const float* a, std::size_t n);
};

/// True when the host CPU can run the variant and it was compiled in.
bool supported(Isa isa) noexcept;

/// Best supported variant. MEDLIT_SIMD=scalar forces the reference path.
Isa detect() noexcept;

/// Throws InvalidParameter if the variant is not supported on this host.
const KernelTable& table_for(Isa isa);

/// Table chosen by detect(), resolved once.
const KernelTable& active() noexcept;

namespace scalar {
double dot_f64(const double* a, const double* b, std::size_t n);
double dot_f64_f32(const double* a, const float* b, std::size_t n);
double sum_squares_f64(const double* a, std::size_t n);
double sum_squares_f32(const float* a, std::size_t n);
}  // namespace scalar

#if defined(MEDLIT_HAVE_AVX2)
namespace avx2 {
double dot_f64(const double* a, const double* b, std::size_t n);
double dot_f64_f32(const double* a, const float* b, std::size_t n);
double sum_squares_f64(const double* a, std::size_t n);
double sum_squares_f32(const float* a, std::size_t n);
}  // namespace avx2
#endif

}  // namespace medlit::simd

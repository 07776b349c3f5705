#include <cstdlib>
#include <string>

#include "medlit/error.hpp"
#include "medlit/simd/kernels.hpp"

namespace medlit::simd {
namespace {

constexpr KernelTable kScalar{Isa::scalar, scalar::dot_f64, scalar::dot_f64_f32, scalar::sum_squares_f64,
                              scalar::sum_squares_f32};

#if defined(MEDLIT_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2, avx2::dot_f64, avx2::dot_f64_f32, avx2::sum_squares_f64,
                            avx2::sum_squares_f32};
#endif

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#if defined(MEDLIT_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

Isa detect() noexcept {
    if (const char* forced = std::getenv("MEDLIT_SIMD"); forced && std::string(forced) == "scalar") {
        return Isa::scalar;
    }
    return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

const KernelTable& table_for(Isa isa) {
    if (!supported(isa)) throw InvalidParameter("SIMD variant not supported on this host: " + std::string(isa_name(isa)));
#if defined(MEDLIT_HAVE_AVX2)
    if (isa == Isa::avx2) return kAvx2;
#endif
    return kScalar;
}

const KernelTable& active() noexcept {
    static const KernelTable& table = table_for(detect());
    return table;
}

}  // namespace medlit::simd

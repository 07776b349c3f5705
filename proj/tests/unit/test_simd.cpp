#include <cmath>
#include <vector>

#include "doctest.h"
#include "generators.hpp"
#include "medlit/error.hpp"
#include "medlit/simd/kernels.hpp"

using namespace medlit;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("scalar kernels are always available") {
    CHECK(simd::supported(simd::Isa::scalar));
    CHECK(simd::table_for(simd::Isa::scalar).isa == simd::Isa::scalar);
    CHECK(simd::isa_name(simd::Isa::scalar) == "scalar");
    CHECK(simd::supported(simd::active().isa));
}

TEST_CASE("scalar kernels on known inputs") {
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> b{4, 5, 6};
    const std::vector<float> bf{4, 5, 6};
    CHECK(simd::scalar::dot_f64(a.data(), b.data(), 3) == 32.0);
    CHECK(simd::scalar::dot_f64_f32(a.data(), bf.data(), 3) == 32.0);
    CHECK(simd::scalar::sum_squares_f64(a.data(), 3) == 14.0);
    CHECK(simd::scalar::sum_squares_f32(bf.data(), 3) == 77.0);
    CHECK(simd::scalar::dot_f64(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("every supported variant agrees with the scalar reference") {
    gen::Rng rng(11);
    for (auto isa : {simd::Isa::scalar, simd::Isa::avx2}) {
        if (!simd::supported(isa)) {
            CHECK_THROWS_AS(simd::table_for(isa), InvalidParameter);
            continue;
        }
        const auto& k = simd::table_for(isa);
        CAPTURE(simd::isa_name(isa));
        for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 100, 767, 768, 1025}) {
            std::vector<double> a(n), b(n);
            std::vector<float> f(n);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = rng.real(-1, 1);
                b[i] = rng.real(-1, 1);
                f[i] = static_cast<float>(rng.real(-1, 1));
            }
            CAPTURE(n);
            CHECK(rel_err(k.dot_f64(a.data(), b.data(), n), simd::scalar::dot_f64(a.data(), b.data(), n)) <= 1e-12);
            CHECK(rel_err(k.dot_f64_f32(a.data(), f.data(), n), simd::scalar::dot_f64_f32(a.data(), f.data(), n)) <=
                  1e-12);
            CHECK(rel_err(k.sum_squares_f64(a.data(), n), simd::scalar::sum_squares_f64(a.data(), n)) <= 1e-12);
            CHECK(rel_err(k.sum_squares_f32(f.data(), n), simd::scalar::sum_squares_f32(f.data(), n)) <= 1e-12);
        }
    }
}

TEST_CASE("unaligned starts give the same results") {
    gen::Rng rng(3);
    std::vector<double> a(300), b(300);
    for (auto& x : a) x = rng.real(-2, 2);
    for (auto& x : b) x = rng.real(-2, 2);
    const auto& k = simd::active();
    for (std::size_t off = 0; off < 5; ++off) {
        const std::size_t n = 300 - off;
        CHECK(rel_err(k.dot_f64(a.data() + off, b.data() + off, n),
                      simd::scalar::dot_f64(a.data() + off, b.data() + off, n)) <= 1e-12);
    }
}

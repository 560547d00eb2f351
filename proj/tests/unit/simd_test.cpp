// Copyright 2026 the dirmix authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstring>
#include <vector>

#include <doctest.h>

#include "dirmix/kmeans.hpp"
#include "dirmix/simd/kernels.hpp"

using namespace dirmix;

namespace {

std::vector<double> random_values(std::size_t n, SeededUniform& rng, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.next();
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Runs every kernel of both tables on the same inputs, at every length up to
// 37 and at an odd offset so the vector loops see unaligned data and tails.
void compare_tables(const simd::KernelTable& ref, const simd::KernelTable& alt) {
    SeededUniform rng(2024);
    for (std::size_t n = 0; n <= 37; ++n) {
        for (std::size_t offset : {0u, 1u}) {
            const std::size_t len = n + offset;
            const auto x = random_values(len, rng, -3.0, 3.0);
            const auto z = random_values(len, rng, -3.0, 3.0);
            const auto c = random_values(len, rng, -3.0, 3.0);
            const auto pos = random_values(len, rng, 1e-9, 5.0);
            const auto y0 = random_values(len, rng, -1.0, 1.0);
            const double a = rng.next() * 2.0 - 1.0;

            auto y1 = y0, y2 = y0;
            ref.axpy(n, a, x.data() + offset, y1.data() + offset);
            alt.axpy(n, a, x.data() + offset, y2.data() + offset);
            CHECK(same_bits(y1, y2));

            y1 = y0, y2 = y0;
            ref.axpy_diff(n, a, x.data() + offset, c.data() + offset, y1.data() + offset);
            alt.axpy_diff(n, a, x.data() + offset, c.data() + offset, y2.data() + offset);
            CHECK(same_bits(y1, y2));

            y1 = y0, y2 = y0;
            ref.mul_acc(n, x.data() + offset, z.data() + offset, y1.data() + offset);
            alt.mul_acc(n, x.data() + offset, z.data() + offset, y2.data() + offset);
            CHECK(same_bits(y1, y2));

            y1 = y0, y2 = y0;
            ref.blend_precision(n, pos.data() + offset, x.data() + offset, z.data() + offset, y1.data() + offset);
            alt.blend_precision(n, pos.data() + offset, x.data() + offset, z.data() + offset, y2.data() + offset);
            CHECK(same_bits(y1, y2));

            y1 = y0, y2 = y0;
            ref.divide(n, x.data() + offset, pos.data() + offset, y1.data() + offset);
            alt.divide(n, x.data() + offset, pos.data() + offset, y2.data() + offset);
            CHECK(same_bits(y1, y2));

            y1 = y0, y2 = y0;
            ref.square(n, x.data() + offset, y1.data() + offset);
            alt.square(n, x.data() + offset, y2.data() + offset);
            CHECK(same_bits(y1, y2));

            y1 = y0, y2 = y0;
            ref.reciprocal(n, pos.data() + offset, y1.data() + offset);
            alt.reciprocal(n, pos.data() + offset, y2.data() + offset);
            CHECK(same_bits(y1, y2));
        }
    }
}

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("scalar reference computes the documented formulas") {
    const auto& k = simd::scalar_kernels();
    std::vector<double> y{1.0, 2.0};
    const std::vector<double> x{3.0, 4.0}, c{1.0, 1.0};
    k.axpy(2, 0.5, x.data(), y.data());
    CHECK(y == std::vector<double>{2.5, 4.0});
    k.axpy_diff(2, 2.0, x.data(), c.data(), y.data());
    CHECK(y == std::vector<double>{6.5, 10.0});
    k.mul_acc(2, x.data(), c.data(), y.data());
    CHECK(y == std::vector<double>{9.5, 14.0});
    const std::vector<double> s2{1.0, 3.0}, tau{0.2, 1.0}, m{0.6, 0.0};
    k.blend_precision(2, s2.data(), tau.data(), m.data(), y.data());
    CHECK(y[0] == doctest::Approx(0.4));
    CHECK(y[1] == doctest::Approx(0.75));
    k.divide(2, x.data(), s2.data(), y.data());
    CHECK(y[1] == 4.0 / 3.0);
    k.square(2, x.data(), y.data());
    CHECK(y == std::vector<double>{9.0, 16.0});
    k.reciprocal(2, x.data(), y.data());
    CHECK(y == std::vector<double>{1.0 / 3.0, 0.25});
}

TEST_CASE("AVX2 kernels are bit-identical to the scalar reference") {
    if (!simd::avx2_available()) {
        MESSAGE("AVX2 not available on this machine; only the scalar table is exercised");
        CHECK(std::string(simd::active().name) == simd::scalar_kernels().name);
        return;
    }
    REQUIRE(simd::avx2_kernels() != nullptr);
    compare_tables(simd::scalar_kernels(), *simd::avx2_kernels());
}

TEST_CASE("active table is one of the compiled variants") {
    const auto* name = simd::active().name;
    const bool known = std::string(name) == simd::scalar_kernels().name ||
                       (simd::avx2_kernels() != nullptr && std::string(name) == simd::avx2_kernels()->name);
    CHECK(known);
}

}  // TEST_SUITE

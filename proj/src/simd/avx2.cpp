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

#include "dirmix/simd/kernels.hpp"

#include <immintrin.h>

// Compiled with -mavx2 -ffp-contract=off. Only reached after a runtime CPU check.

namespace dirmix::simd {

namespace avx2 {

void axpy(std::size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_diff(std::size_t n, double a, const double* x, const double* c, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(c + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, d)));
    }
    for (; i < n; ++i) y[i] += a * (x[i] - c[i]);
}

void mul_acc(std::size_t n, const double* x, const double* z, double* y) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(z + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), p));
    }
    for (; i < n; ++i) y[i] += x[i] * z[i];
}

void blend_precision(std::size_t n, const double* s2, const double* tau, const double* m,
                     double* out) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vs = _mm256_loadu_pd(s2 + i);
        const __m256d num =
            _mm256_add_pd(_mm256_mul_pd(vs, _mm256_loadu_pd(tau + i)), _mm256_loadu_pd(m + i));
        _mm256_storeu_pd(out + i, _mm256_div_pd(num, _mm256_add_pd(vs, one)));
    }
    for (; i < n; ++i) out[i] = (s2[i] * tau[i] + m[i]) / (s2[i] + 1.0);
}

void divide(std::size_t n, const double* num, const double* den, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_div_pd(_mm256_loadu_pd(num + i), _mm256_loadu_pd(den + i)));
    }
    for (; i < n; ++i) out[i] = num[i] / den[i];
}

void square(std::size_t n, const double* x, double* y) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(y + i, _mm256_mul_pd(v, v));
    }
    for (; i < n; ++i) y[i] = x[i] * x[i];
}

void reciprocal(std::size_t n, const double* x, double* y) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_div_pd(one, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) y[i] = 1.0 / x[i];
}

constexpr KernelTable table{"avx2", axpy, axpy_diff, mul_acc, blend_precision,
                            divide, square, reciprocal};

}  // namespace avx2

const KernelTable* avx2_kernels() noexcept { return &avx2::table; }

}  // namespace dirmix::simd

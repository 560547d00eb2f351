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

namespace dirmix::simd {

namespace {

void axpy(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy_diff(std::size_t n, double a, const double* x, const double* c, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * (x[i] - c[i]);
}

void mul_acc(std::size_t n, const double* x, const double* z, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i] * z[i];
}

void blend_precision(std::size_t n, const double* s2, const double* tau, const double* m,
                     double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = (s2[i] * tau[i] + m[i]) / (s2[i] + 1.0);
}

void divide(std::size_t n, const double* num, const double* den, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = num[i] / den[i];
}

void square(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * x[i];
}

void reciprocal(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / x[i];
}

constexpr KernelTable table{"scalar", axpy, axpy_diff, mul_acc, blend_precision,
                            divide, square, reciprocal};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return table; }

}  // namespace dirmix::simd

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

#pragma once

#include <cstddef>

namespace dirmix::simd {

// Elementwise kernels behind the spatial and mixing-update hot loops.
// Every variant performs the same IEEE operations in the same order per
// element (no fused multiply-add, no horizontal reductions), so all
// variants are bit-identical to the scalar reference.
struct KernelTable {
    const char* name;
    // y += a·x
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    // y += a·(x − c)
    void (*axpy_diff)(std::size_t n, double a, const double* x, const double* c, double* y);
    // y += x·z
    void (*mul_acc)(std::size_t n, const double* x, const double* z, double* y);
    // out = (s2·tau + m) / (s2 + 1)
    void (*blend_precision)(std::size_t n, const double* s2, const double* tau, const double* m,
                            double* out);
    // out = num / den
    void (*divide)(std::size_t n, const double* num, const double* den, double* out);
    // y = x·x
    void (*square)(std::size_t n, const double* x, double* y);
    // y = 1 / x
    void (*reciprocal)(std::size_t n, const double* x, double* y);
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when the build has no AVX2 translation unit.
const KernelTable* avx2_kernels() noexcept;

/// True when AVX2 kernels are compiled in and the running CPU supports them.
bool avx2_available() noexcept;

/// Kernel table chosen at first use: AVX2 when available, scalar otherwise.
/// Setting DIRMIX_SIMD=scalar in the environment forces the reference path.
const KernelTable& active() noexcept;

}  // namespace dirmix::simd

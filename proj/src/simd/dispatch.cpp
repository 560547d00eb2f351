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

#include <cstdlib>
#include <cstring>

#include "dirmix/simd/kernels.hpp"

namespace dirmix::simd {

#if !defined(DIRMIX_HAVE_AVX2)
const KernelTable* avx2_kernels() noexcept { return nullptr; }
#endif

bool avx2_available() noexcept {
#if defined(DIRMIX_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable& active() noexcept {
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* forced = std::getenv("DIRMIX_SIMD");
        if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return scalar_kernels();
        if (avx2_available()) return *avx2_kernels();
        return scalar_kernels();
    }();
    return chosen;
}

}  // namespace dirmix::simd

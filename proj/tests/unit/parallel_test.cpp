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

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "dirmix/parallel.hpp"

using namespace dirmix;

TEST_SUITE("parallel") {

TEST_CASE("worker count follows DIRMIX_THREADS") {
    ::setenv("DIRMIX_THREADS", "3", 1);
    CHECK(worker_count() == 3);
    ::setenv("DIRMIX_THREADS", "0", 1);
    CHECK(worker_count() >= 1);
    ::setenv("DIRMIX_THREADS", "lots", 1);
    CHECK(worker_count() >= 1);
    ::unsetenv("DIRMIX_THREADS");
    CHECK(worker_count() >= 1);
}

TEST_CASE("every index runs exactly once") {
    for (const char* threads : {"1", "4"}) {
        ::setenv("DIRMIX_THREADS", threads, 1);
        std::vector<std::atomic<int>> hits(257);
        parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; });
        for (const auto& h : hits) CHECK(h.load() == 1);
        parallel_for(0, [&](std::size_t) { FAIL("no work expected"); });
    }
    ::unsetenv("DIRMIX_THREADS");
}

TEST_CASE("exceptions reach the caller") {
    ::setenv("DIRMIX_THREADS", "4", 1);
    CHECK_THROWS_AS(parallel_for(16, [](std::size_t i) {
                        if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
    ::unsetenv("DIRMIX_THREADS");
}

}  // TEST_SUITE

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
#include <functional>

namespace dirmix {

/// Worker cap: DIRMIX_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(i) for i in [0, count). Each index is handled by exactly one
/// worker and writes only its own outputs, so results do not depend on the
/// number of workers. The first exception thrown is rethrown after all
/// workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace dirmix

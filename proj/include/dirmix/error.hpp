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

#include <stdexcept>
#include <string>

namespace dirmix {

enum class Errc {
    bad_magic,
    truncated_payload,
    non_finite_value,
    io_failure,
    invalid_argument,
    too_many_components,
    degenerate_density,
    zero_row_weight,
    non_finite,
    not_positive_definite,
    empty_component,
    dof_bracket_failure,
    non_positive_sigma,
    shape_mismatch,
    shrink_requested,
    grow_requested,
    channel_mismatch,
    dimension_mismatch,
    missing_reference,
    invalid_config,
};

const char* to_string(Errc code) noexcept;

/// Classified failure raised by every dirmix operation.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace dirmix

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

#include "dirmix/error.hpp"

namespace dirmix {

const char* to_string(Errc code) noexcept {
    switch (code) {
        case Errc::bad_magic: return "BadMagic";
        case Errc::truncated_payload: return "TruncatedPayload";
        case Errc::non_finite_value: return "NonFiniteValue";
        case Errc::io_failure: return "IoFailure";
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::too_many_components: return "TooManyComponents";
        case Errc::degenerate_density: return "DegenerateDensity";
        case Errc::zero_row_weight: return "ZeroRowWeight";
        case Errc::non_finite: return "NonFinite";
        case Errc::not_positive_definite: return "NotPositiveDefinite";
        case Errc::empty_component: return "EmptyComponent";
        case Errc::dof_bracket_failure: return "DofBracketFailure";
        case Errc::non_positive_sigma: return "NonPositiveSigma";
        case Errc::shape_mismatch: return "ShapeMismatch";
        case Errc::shrink_requested: return "ShrinkRequested";
        case Errc::grow_requested: return "GrowRequested";
        case Errc::channel_mismatch: return "ChannelMismatch";
        case Errc::dimension_mismatch: return "DimensionMismatch";
        case Errc::missing_reference: return "MissingReference";
        case Errc::invalid_config: return "InvalidConfig";
    }
    return "Unknown";
}

}  // namespace dirmix

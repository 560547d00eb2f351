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
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dirmix/types.hpp"

namespace dirmix {

/// One layer of a feature stack: height×width pixels, channel-fastest.
struct LayerGrid {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t channels = 0;
    std::vector<float> values;

    GridShape shape() const noexcept { return {height, width}; }
    std::span<const float> pixel(std::size_t n) const {
        return {values.data() + n * channels, channels};
    }
    friend bool operator==(const LayerGrid&, const LayerGrid&) = default;
};

struct FeatureStack {
    std::vector<LayerGrid> layers;

    friend bool operator==(const FeatureStack&, const FeatureStack&) = default;
};

/// Hard segmentation of a lattice into `components` labels.
struct LabelMap {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t components = 0;
    std::vector<std::uint32_t> labels;

    GridShape shape() const noexcept { return {height, width}; }
    friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

inline constexpr std::uint8_t fmap_magic[8] = {'F', 'M', 'A', 'P', 0, 0, 0, 1};

/// Throws InvalidArgument / NonFiniteValue when the stack breaks the container rules.
void validate(const FeatureStack& stack);

/// Exact byte size of the FMAP encoding of `stack`.
std::size_t fmap_byte_size(const FeatureStack& stack);

/// Decodes an FMAP byte string. Every input either parses or throws a
/// classified Error (BadMagic, TruncatedPayload, NonFiniteValue).
FeatureStack parse_fmap(std::span<const std::byte> bytes);
std::vector<std::byte> serialize_fmap(const FeatureStack& stack);

FeatureStack read_fmap(const std::filesystem::path& path);
void write_fmap(const FeatureStack& stack, const std::filesystem::path& path);

/// Binary PGM (P5, maxval 255), label k stored as byte k.
std::vector<std::byte> encode_labelmap_pgm(const LabelMap& map);
void write_labelmap_pgm(const LabelMap& map, const std::filesystem::path& path);

/// One component plane written as round(255·p).
void write_probability_pgm(std::span<const double> plane, GridShape shape,
                           const std::filesystem::path& path);

/// Reads a P5 label map; `components` is set to max label + 1.
LabelMap read_labelmap_pgm(const std::filesystem::path& path);

/// Feature matrix (N×channels) of one layer in double precision.
RowMatrix to_matrix(const LayerGrid& layer);
LayerGrid from_matrix(const RowMatrix& values, GridShape shape);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace dirmix

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
#include <string>
#include <vector>

namespace dirmix {

/// Named f64 array with explicit shape. The container is:
///   magic `DMXT\0\0\0\1` | count u32-LE | per block:
///   name length u32-LE, name bytes, rank u32-LE, dims u32-LE × rank,
///   payload f64-LE row-major.
struct Tensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<double> values;

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline constexpr std::uint8_t tensor_magic[8] = {'D', 'M', 'X', 'T', 0, 0, 0, 1};

std::vector<std::byte> encode_tensors(std::span<const Tensor> tensors);
std::vector<Tensor> decode_tensors(std::span<const std::byte> bytes);

void write_tensor_file(const std::filesystem::path& path, std::span<const Tensor> tensors);
std::vector<Tensor> read_tensor_file(const std::filesystem::path& path);

/// Looks a block up by name; throws InvalidArgument when absent.
const Tensor& find_tensor(std::span<const Tensor> tensors, const std::string& name);

}  // namespace dirmix

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

#include "dirmix/feature_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "dirmix/error.hpp"

namespace dirmix {

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::span<const std::byte> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(bytes[offset + i])) << (8 * i);
    }
    return v;
}

std::string layer_tag(std::size_t index) { return "layer " + std::to_string(index + 1); }

void append_ascii(std::vector<std::byte>& out, const std::string& text) {
    for (char c : text) out.push_back(static_cast<std::byte>(c));
}

}  // namespace

void validate(const FeatureStack& stack) {
    if (stack.layers.empty()) throw Error(Errc::invalid_argument, "feature stack has no layers");
    for (std::size_t h = 0; h < stack.layers.size(); ++h) {
        const auto& layer = stack.layers[h];
        if (layer.height == 0 || layer.width == 0 || layer.channels == 0) {
            throw Error(Errc::invalid_argument, layer_tag(h) + " has a zero dimension");
        }
        const std::size_t expected =
            std::size_t{layer.height} * layer.width * layer.channels;
        if (layer.values.size() != expected) {
            throw Error(Errc::invalid_argument,
                        layer_tag(h) + " holds " + std::to_string(layer.values.size()) +
                            " values, expected " + std::to_string(expected));
        }
        for (std::size_t i = 0; i < layer.values.size(); ++i) {
            if (!std::isfinite(layer.values[i])) {
                throw Error(Errc::non_finite_value,
                            layer_tag(h) + " value index " + std::to_string(i));
            }
        }
    }
}

std::size_t fmap_byte_size(const FeatureStack& stack) {
    std::size_t size = 8 + 4 + 12 * stack.layers.size();
    for (const auto& layer : stack.layers) {
        size += 4 * std::size_t{layer.height} * layer.width * layer.channels;
    }
    return size;
}

FeatureStack parse_fmap(std::span<const std::byte> bytes) {
    if (bytes.size() < 8 ||
        std::memcmp(bytes.data(), fmap_magic, sizeof(fmap_magic)) != 0) {
        throw Error(Errc::bad_magic, "missing FMAP signature");
    }
    if (bytes.size() < 12) throw Error(Errc::truncated_payload, "header ends before layer count");
    const std::uint32_t count = get_u32(bytes, 8);
    if (count == 0) throw Error(Errc::invalid_argument, "layer count is zero");

    std::size_t offset = 12;
    // Header first; it is only trusted once its own length fits the buffer.
    if ((bytes.size() - offset) / 12 < count) {
        throw Error(Errc::truncated_payload, "header ends before all layer shapes");
    }
    FeatureStack stack;
    stack.layers.resize(count);
    for (std::uint32_t h = 0; h < count; ++h) {
        auto& layer = stack.layers[h];
        layer.height = get_u32(bytes, offset);
        layer.width = get_u32(bytes, offset + 4);
        layer.channels = get_u32(bytes, offset + 8);
        offset += 12;
        if (layer.height == 0 || layer.width == 0 || layer.channels == 0) {
            throw Error(Errc::invalid_argument, layer_tag(h) + " has a zero dimension");
        }
    }
    for (std::uint32_t h = 0; h < count; ++h) {
        auto& layer = stack.layers[h];
        const unsigned __int128 wide = static_cast<unsigned __int128>(layer.height) *
                                       layer.width * layer.channels * 4u;
        const std::size_t remaining = bytes.size() - offset;
        if (wide > remaining) {
            throw Error(Errc::truncated_payload,
                        layer_tag(h) + " payload needs " + std::to_string(static_cast<std::uint64_t>(wide)) +
                            " bytes at offset " + std::to_string(offset) + ", " +
                            std::to_string(remaining) + " available");
        }
        const std::size_t count_values = static_cast<std::size_t>(wide / 4);
        layer.values.resize(count_values);
        for (std::size_t i = 0; i < count_values; ++i) {
            const float v = std::bit_cast<float>(get_u32(bytes, offset));
            if (!std::isfinite(v)) {
                throw Error(Errc::non_finite_value,
                            layer_tag(h) + " value index " + std::to_string(i) + " at offset " +
                                std::to_string(offset));
            }
            layer.values[i] = v;
            offset += 4;
        }
    }
    if (offset != bytes.size()) {
        throw Error(Errc::invalid_argument,
                    std::to_string(bytes.size() - offset) + " trailing bytes after payload");
    }
    return stack;
}

std::vector<std::byte> serialize_fmap(const FeatureStack& stack) {
    validate(stack);
    std::vector<std::byte> out;
    out.reserve(fmap_byte_size(stack));
    for (auto b : fmap_magic) out.push_back(static_cast<std::byte>(b));
    put_u32(out, static_cast<std::uint32_t>(stack.layers.size()));
    for (const auto& layer : stack.layers) {
        put_u32(out, layer.height);
        put_u32(out, layer.width);
        put_u32(out, layer.channels);
    }
    for (const auto& layer : stack.layers) {
        for (float v : layer.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> bytes(raw.size());
    std::memcpy(bytes.data(), raw.data(), raw.size());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_failure, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io_failure, "short write to " + path.string());
}

FeatureStack read_fmap(const std::filesystem::path& path) {
    return parse_fmap(read_file_bytes(path));
}

void write_fmap(const FeatureStack& stack, const std::filesystem::path& path) {
    write_file_bytes(path, serialize_fmap(stack));
}

std::vector<std::byte> encode_labelmap_pgm(const LabelMap& map) {
    if (map.components > 256) {
        throw Error(Errc::too_many_components,
                    std::to_string(map.components) + " labels do not fit in one byte");
    }
    if (map.labels.size() != std::size_t{map.height} * map.width) {
        throw Error(Errc::invalid_argument, "label count does not match map size");
    }
    std::vector<std::byte> out;
    append_ascii(out, "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) +
                          "\n255\n");
    for (auto label : map.labels) {
        if (label >= map.components || label > 255) {
            throw Error(Errc::invalid_argument, "label " + std::to_string(label) + " out of range");
        }
        out.push_back(static_cast<std::byte>(label));
    }
    return out;
}

void write_labelmap_pgm(const LabelMap& map, const std::filesystem::path& path) {
    write_file_bytes(path, encode_labelmap_pgm(map));
}

void write_probability_pgm(std::span<const double> plane, GridShape shape,
                           const std::filesystem::path& path) {
    if (plane.size() != shape.size()) throw Error(Errc::shape_mismatch, "plane size");
    std::vector<std::byte> out;
    append_ascii(out, "P5\n" + std::to_string(shape.width) + " " + std::to_string(shape.height) +
                          "\n255\n");
    for (double p : plane) {
        const double scaled = std::round(255.0 * std::clamp(p, 0.0, 1.0));
        out.push_back(static_cast<std::byte>(static_cast<std::uint8_t>(scaled)));
    }
    write_file_bytes(path, out);
}

LabelMap read_labelmap_pgm(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    std::size_t pos = 0;
    auto next_token = [&]() {
        std::string token;
        while (pos < bytes.size()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && static_cast<char>(bytes[pos]) != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (!token.empty()) break;
                ++pos;
            } else {
                token.push_back(c);
                ++pos;
            }
        }
        return token;
    };
    if (next_token() != "P5") throw Error(Errc::bad_magic, path.string() + " is not a P5 PGM");
    LabelMap map;
    try {
        map.width = static_cast<std::uint32_t>(std::stoul(next_token()));
        map.height = static_cast<std::uint32_t>(std::stoul(next_token()));
        if (std::stoul(next_token()) > 255) {
            throw Error(Errc::invalid_argument, path.string() + ": 16-bit PGM unsupported");
        }
    } catch (const std::logic_error&) {
        throw Error(Errc::invalid_argument, path.string() + ": malformed PGM header");
    }
    ++pos;  // single whitespace after maxval
    const std::size_t n = std::size_t{map.width} * map.height;
    if (pos > bytes.size() || bytes.size() - pos < n) {
        throw Error(Errc::truncated_payload, path.string());
    }
    map.labels.resize(n);
    std::uint32_t max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        map.labels[i] = std::to_integer<std::uint8_t>(bytes[pos + i]);
        max_label = std::max(max_label, map.labels[i]);
    }
    map.components = max_label + 1;
    return map;
}

RowMatrix to_matrix(const LayerGrid& layer) {
    RowMatrix out(std::size_t{layer.height} * layer.width, layer.channels);
    std::copy(layer.values.begin(), layer.values.end(), out.data());
    return out;
}

LayerGrid from_matrix(const RowMatrix& values, GridShape shape) {
    if (static_cast<std::size_t>(values.rows()) != shape.size()) {
        throw Error(Errc::shape_mismatch, "matrix rows do not match lattice size");
    }
    LayerGrid layer;
    layer.height = static_cast<std::uint32_t>(shape.height);
    layer.width = static_cast<std::uint32_t>(shape.width);
    layer.channels = static_cast<std::uint32_t>(values.cols());
    layer.values.resize(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        layer.values[static_cast<std::size_t>(i)] = static_cast<float>(values.data()[i]);
    }
    return layer;
}

}  // namespace dirmix

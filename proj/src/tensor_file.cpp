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

#include "dirmix/tensor_file.hpp"

#include <bit>
#include <cstring>

#include "dirmix/error.hpp"
#include "dirmix/feature_io.hpp"

namespace dirmix {

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

class Cursor {
public:
    explicit Cursor(std::span<const std::byte> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{std::to_integer<std::uint8_t>(bytes_[pos_ + i])} << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{std::to_integer<std::uint8_t>(bytes_[pos_ + i])} << (8 * i);
        pos_ += 8;
        return v;
    }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw Error(Errc::truncated_payload, "tensor file ends early");
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::byte> encode_tensors(std::span<const Tensor> tensors) {
    std::vector<std::byte> out;
    for (auto b : tensor_magic) out.push_back(static_cast<std::byte>(b));
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        std::size_t expected = 1;
        for (auto d : t.dims) expected *= d;
        if (expected != t.values.size()) {
            throw Error(Errc::invalid_argument, "tensor '" + t.name + "' shape/value count mismatch");
        }
        put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        for (char c : t.name) out.push_back(static_cast<std::byte>(c));
        put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) put_u32(out, d);
        for (double v : t.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

std::vector<Tensor> decode_tensors(std::span<const std::byte> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), tensor_magic, 8) != 0) {
        throw Error(Errc::bad_magic, "missing DMXT signature");
    }
    Cursor cur(bytes.subspan(8));
    const std::uint32_t count = cur.u32();
    std::vector<Tensor> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor t;
        t.name = cur.text(cur.u32());
        const std::uint32_t rank = cur.u32();
        if (rank > 8) throw Error(Errc::invalid_argument, "tensor rank " + std::to_string(rank));
        unsigned __int128 total = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            t.dims.push_back(cur.u32());
            total *= t.dims.back();
        }
        if (total * 8 > cur.remaining()) throw Error(Errc::truncated_payload, "tensor '" + t.name + "'");
        t.values.resize(static_cast<std::size_t>(total));
        for (auto& v : t.values) v = std::bit_cast<double>(cur.u64());
        tensors.push_back(std::move(t));
    }
    if (cur.remaining() != 0) throw Error(Errc::invalid_argument, "trailing bytes in tensor file");
    return tensors;
}

void write_tensor_file(const std::filesystem::path& path, std::span<const Tensor> tensors) {
    write_file_bytes(path, encode_tensors(tensors));
}

std::vector<Tensor> read_tensor_file(const std::filesystem::path& path) {
    return decode_tensors(read_file_bytes(path));
}

const Tensor& find_tensor(std::span<const Tensor> tensors, const std::string& name) {
    for (const auto& t : tensors) {
        if (t.name == name) return t;
    }
    throw Error(Errc::invalid_argument, "no tensor named '" + name + "'");
}

}  // namespace dirmix

// Copyright 2026 The duofm authors
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

#include <bit>
#include <cstdint>
#include <cstring>
#include <ostream>
#include <istream>
#include <string>
#include <vector>

#include <duofm/errors.hpp>

namespace duofm::detail {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swaps");

template <typename T>
inline void write_pod(std::ostream& os, const T& value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
inline T read_pod(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw CorruptionError("unexpected end of file");
    return value;
}

inline void write_bytes(std::ostream& os, const void* data, std::size_t n) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& is, void* data, std::size_t n) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n));
    if (!is) throw CorruptionError("unexpected end of file");
}

/// 64-bit FNV-1a over a byte range.
class Fnv1a {
public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash_ ^= p[i];
            hash_ *= 0x100000001b3ULL;
        }
    }
    template <typename T>
    void update_pod(const T& value) {
        update(&value, sizeof(T));
    }
    std::uint64_t digest() const noexcept { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

/// CRC-32 (IEEE 802.3 polynomial, reflected).
class Crc32 {
public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        std::uint32_t c = ~crc_;
        for (std::size_t i = 0; i < n; ++i) {
            c ^= p[i];
            for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
        }
        crc_ = ~c;
    }
    std::uint32_t digest() const noexcept { return crc_; }

private:
    std::uint32_t crc_ = 0;
};

inline std::uint64_t fnv1a_file(const std::string& bytes) {
    Fnv1a h;
    h.update(bytes.data(), bytes.size());
    return h.digest();
}

} // namespace duofm::detail

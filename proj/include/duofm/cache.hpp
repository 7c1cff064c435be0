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

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <duofm/detail/binio.hpp>
#include <duofm/spectral.hpp>

namespace duofm {

/// Precomputed spectral data for one mesh. Everything downstream of operator
/// assembly and the two eigensolves; cheap to reload, expensive to recompute.
struct SpectralCacheBundle {
    std::uint64_t mesh_hash = 0;
    SparseMatrixd stiffness;
    Eigen::VectorXd mass;
    RealSpectralBasis real_basis;
    ComplexSpectralBasis cx_basis;
};

namespace detail {

// Section ids inside the cache container.
enum CacheSection : std::uint32_t {
    kSectionStiffness = 1,
    kSectionMass = 2,
    kSectionPhi = 3,
    kSectionLambda = 4,
    kSectionPsi = 5,
    kSectionMu = 6,
};

inline constexpr char kCacheMagic[4] = {'D', 'U', 'O', 'F'};
inline constexpr std::uint32_t kCacheVersion = 1;

inline void append_pod(std::string& buf, const void* data, std::size_t n) {
    buf.append(static_cast<const char*>(data), n);
}

template <typename T>
inline void append(std::string& buf, const T& value) {
    append_pod(buf, &value, sizeof(T));
}

/// Sorted (row, col, value) triples, the canonical sparse layout.
inline std::string encode_sparse(const SparseMatrixd& m) {
    std::vector<Eigen::Triplet<double>> triples;
    triples.reserve(static_cast<std::size_t>(m.nonZeros()));
    for (int outer = 0; outer < m.outerSize(); ++outer)
        for (SparseMatrixd::InnerIterator it(m, outer); it; ++it)
            triples.emplace_back(it.row(), it.col(), it.value());
    std::sort(triples.begin(), triples.end(), [](const auto& a, const auto& b) {
        return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
    });
    std::string buf;
    const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
    const std::uint64_t nnz = triples.size();
    append(buf, rows);
    append(buf, cols);
    append(buf, nnz);
    for (const auto& t : triples) {
        append(buf, static_cast<std::uint32_t>(t.row()));
        append(buf, static_cast<std::uint32_t>(t.col()));
        append(buf, t.value());
    }
    return buf;
}

inline SparseMatrixd decode_sparse(std::istringstream& is) {
    const auto rows = read_pod<std::uint64_t>(is);
    const auto cols = read_pod<std::uint64_t>(is);
    const auto nnz = read_pod<std::uint64_t>(is);
    std::vector<Eigen::Triplet<double>> triples;
    triples.reserve(nnz);
    for (std::uint64_t i = 0; i < nnz; ++i) {
        const auto r = read_pod<std::uint32_t>(is);
        const auto c = read_pod<std::uint32_t>(is);
        const auto v = read_pod<double>(is);
        triples.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    }
    SparseMatrixd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    m.setFromTriplets(triples.begin(), triples.end());
    return m;
}

inline std::string encode_real_matrix(const Eigen::MatrixXd& m) {
    std::string buf;
    append(buf, static_cast<std::uint64_t>(m.rows()));
    append(buf, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) append(buf, m(r, c));
    return buf;
}

inline Eigen::MatrixXd decode_real_matrix(std::istringstream& is) {
    const auto rows = read_pod<std::uint64_t>(is);
    const auto cols = read_pod<std::uint64_t>(is);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = read_pod<double>(is);
    return m;
}

inline std::string encode_complex_matrix(const Eigen::MatrixXcd& m) {
    std::string buf;
    append(buf, static_cast<std::uint64_t>(m.rows()));
    append(buf, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            append(buf, m(r, c).real());
            append(buf, m(r, c).imag());
        }
    return buf;
}

inline Eigen::MatrixXcd decode_complex_matrix(std::istringstream& is) {
    const auto rows = read_pod<std::uint64_t>(is);
    const auto cols = read_pod<std::uint64_t>(is);
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            const double re = read_pod<double>(is);
            const double im = read_pod<double>(is);
            m(r, c) = Complex(re, im);
        }
    return m;
}

} // namespace detail

/// Writes the cache: magic "DUOF", version, mesh hash, length-framed
/// sections, trailing CRC32 over everything before it. Bit-exact round trip.
inline void cache_write(const std::string& path, const SpectralCacheBundle& bundle) {
    std::string body;
    detail::append_pod(body, detail::kCacheMagic, 4);
    detail::append(body, detail::kCacheVersion);
    detail::append(body, bundle.mesh_hash);

    auto add_section = [&](std::uint32_t id, const std::string& payload) {
        detail::append(body, id);
        detail::append(body, static_cast<std::uint64_t>(payload.size()));
        body += payload;
    };
    add_section(detail::kSectionStiffness, detail::encode_sparse(bundle.stiffness));
    add_section(detail::kSectionMass, detail::encode_real_matrix(bundle.mass));
    add_section(detail::kSectionPhi, detail::encode_real_matrix(bundle.real_basis.phi));
    add_section(detail::kSectionLambda, detail::encode_real_matrix(bundle.real_basis.lambda));
    add_section(detail::kSectionPsi, detail::encode_complex_matrix(bundle.cx_basis.psi));
    add_section(detail::kSectionMu, detail::encode_real_matrix(bundle.cx_basis.mu));

    detail::Crc32 crc;
    crc.update(body.data(), body.size());
    detail::append(body, crc.digest());

    std::ofstream os(path, std::ios::binary);
    if (!os) throw CorruptionError("cannot open cache file " + path + " for writing");
    os.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!os) throw CorruptionError("cache write failed for " + path);
}

/// Reads and checks a cache file; recomputes nothing.
inline SpectralCacheBundle cache_read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CorruptionError("cannot open cache file " + path);
    std::ostringstream tmp;
    tmp << is.rdbuf();
    std::string body = tmp.str();
    if (body.size() < 4 + sizeof(std::uint32_t) + sizeof(std::uint64_t) + sizeof(std::uint32_t))
        throw CorruptionError("cache file is truncated");

    const std::uint32_t stored_crc =
        *reinterpret_cast<const std::uint32_t*>(body.data() + body.size() - 4);
    detail::Crc32 crc;
    crc.update(body.data(), body.size() - 4);
    if (crc.digest() != stored_crc) throw CorruptionError("cache checksum mismatch");

    std::istringstream in(body.substr(0, body.size() - 4));
    char magic[4];
    detail::read_bytes(in, magic, 4);
    if (std::memcmp(magic, detail::kCacheMagic, 4) != 0)
        throw CacheVersionError("not a duofm cache file (bad magic)");
    const auto version = detail::read_pod<std::uint32_t>(in);
    if (version != detail::kCacheVersion)
        throw CacheVersionError("unsupported cache version " + std::to_string(version));

    SpectralCacheBundle bundle;
    bundle.mesh_hash = detail::read_pod<std::uint64_t>(in);

    while (in.peek() != std::char_traits<char>::eof()) {
        const auto id = detail::read_pod<std::uint32_t>(in);
        const auto length = detail::read_pod<std::uint64_t>(in);
        std::string payload(length, '\0');
        detail::read_bytes(in, payload.data(), length);
        std::istringstream section(payload);
        switch (id) {
            case detail::kSectionStiffness: bundle.stiffness = detail::decode_sparse(section); break;
            case detail::kSectionMass: bundle.mass = detail::decode_real_matrix(section); break;
            case detail::kSectionPhi: bundle.real_basis.phi = detail::decode_real_matrix(section); break;
            case detail::kSectionLambda:
                bundle.real_basis.lambda = detail::decode_real_matrix(section);
                break;
            case detail::kSectionPsi: bundle.cx_basis.psi = detail::decode_complex_matrix(section); break;
            case detail::kSectionMu: bundle.cx_basis.mu = detail::decode_real_matrix(section); break;
            default: break; // unknown sections are skipped for forward compatibility
        }
    }
    bundle.real_basis.lambda_hat = detail::normalized_spectrum(bundle.real_basis.lambda);
    bundle.real_basis.mass = bundle.mass;
    bundle.cx_basis.mu_hat = detail::normalized_spectrum(bundle.cx_basis.mu);
    bundle.cx_basis.mass = bundle.mass;
    return bundle;
}

/// As cache_read, but also checks the stored hash against the mesh.
inline SpectralCacheBundle cache_read_for_mesh(const std::string& path, const TriangleMesh& mesh) {
    SpectralCacheBundle bundle = cache_read(path);
    if (bundle.mesh_hash != mesh.content_hash())
        throw HashMismatchError("cache was built for a different mesh");
    return bundle;
}

} // namespace duofm

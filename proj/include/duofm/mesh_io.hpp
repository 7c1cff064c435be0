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

#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <duofm/mesh.hpp>

namespace duofm {

enum class MeshFormat { OFF, OBJ, PLY };

inline MeshFormat format_from_path(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".off") return MeshFormat::OFF;
    if (ext == ".obj") return MeshFormat::OBJ;
    if (ext == ".ply") return MeshFormat::PLY;
    throw ParseError("unrecognized mesh extension '" + ext + "' for " + path);
}

namespace detail {

/// Line-oriented tokenizer that tracks line numbers for error reporting.
class LineReader {
public:
    explicit LineReader(std::istream& is) : is_(is) {}

    /// Next line with comments ('#') stripped, skipping blank lines.
    /// Returns false at end of input.
    bool next(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(is_, line)) {
            ++line_;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            tokens.clear();
            std::istringstream ss(line);
            std::string tok;
            while (ss >> tok) tokens.push_back(tok);
            if (!tokens.empty()) return true;
        }
        return false;
    }

    long line() const noexcept { return line_; }

private:
    std::istream& is_;
    long line_ = 0;
};

inline double parse_double(const std::string& tok, long line) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("expected a number, got '" + tok + "'", line);
    return value;
}

inline long parse_int(const std::string& tok, long line) {
    long value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("expected an integer, got '" + tok + "'", line);
    return value;
}

inline TriangleMesh load_off(std::istream& is, const std::string& name) {
    LineReader reader(is);
    std::vector<std::string> tok;
    if (!reader.next(tok)) throw ParseError("empty OFF file", reader.line());
    long nv = 0, nf = 0;
    if (tok[0] == "OFF") {
        if (tok.size() >= 3) { // counts may share the header line
            nv = parse_int(tok[1], reader.line());
            nf = parse_int(tok[2], reader.line());
        } else {
            if (!reader.next(tok) || tok.size() < 2)
                throw ParseError("missing OFF counts line", reader.line());
            nv = parse_int(tok[0], reader.line());
            nf = parse_int(tok[1], reader.line());
        }
    } else {
        throw ParseError("missing OFF header", reader.line());
    }
    if (nv < 0 || nf < 0) throw ParseError("negative OFF counts", reader.line());

    Eigen::MatrixX3d vertices(nv, 3);
    for (long i = 0; i < nv; ++i) {
        if (!reader.next(tok) || tok.size() < 3)
            throw ParseError("expected vertex line", reader.line());
        for (int c = 0; c < 3; ++c) vertices(i, c) = parse_double(tok[c], reader.line());
    }
    Eigen::MatrixX3i faces(nf, 3);
    for (long i = 0; i < nf; ++i) {
        if (!reader.next(tok) || tok.empty())
            throw ParseError("expected face line", reader.line());
        const long arity = parse_int(tok[0], reader.line());
        if (arity != 3)
            throw ParseError("only triangle faces are supported, got arity " +
                                 std::to_string(arity),
                             reader.line());
        if (tok.size() < 4) throw ParseError("truncated face line", reader.line());
        for (int c = 0; c < 3; ++c)
            faces(i, c) = static_cast<int>(parse_int(tok[c + 1], reader.line()));
    }
    return TriangleMesh::create(std::move(vertices), std::move(faces), name);
}

inline TriangleMesh load_obj(std::istream& is, const std::string& name) {
    LineReader reader(is);
    std::vector<std::string> tok;
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector3i> faces;
    while (reader.next(tok)) {
        if (tok[0] == "v") {
            if (tok.size() < 4) throw ParseError("truncated vertex line", reader.line());
            vertices.emplace_back(parse_double(tok[1], reader.line()),
                                  parse_double(tok[2], reader.line()),
                                  parse_double(tok[3], reader.line()));
        } else if (tok[0] == "f") {
            if (tok.size() != 4)
                throw ParseError("only triangle faces are supported", reader.line());
            Eigen::Vector3i f;
            for (int c = 0; c < 3; ++c) {
                std::string ref = tok[c + 1];
                const auto slash = ref.find('/'); // keep the position index only
                if (slash != std::string::npos) ref.erase(slash);
                const long idx = parse_int(ref, reader.line());
                if (idx <= 0)
                    throw ParseError("non-positive vertex reference '" + ref + "'",
                                     reader.line());
                f[c] = static_cast<int>(idx - 1);
            }
            faces.push_back(f);
        }
        // vn/vt/g/o/s/usemtl/mtllib lines carry no geometry we keep.
    }
    Eigen::MatrixX3d V(static_cast<Eigen::Index>(vertices.size()), 3);
    for (std::size_t i = 0; i < vertices.size(); ++i) V.row(static_cast<Eigen::Index>(i)) = vertices[i];
    Eigen::MatrixX3i F(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t i = 0; i < faces.size(); ++i) F.row(static_cast<Eigen::Index>(i)) = faces[i];
    return TriangleMesh::create(std::move(V), std::move(F), name);
}

inline TriangleMesh load_ply(std::istream& is, const std::string& name) {
    LineReader reader(is);
    std::vector<std::string> tok;
    if (!reader.next(tok) || tok[0] != "ply") throw ParseError("missing ply magic", reader.line());

    long nv = -1, nf = -1;
    int x_col = -1, y_col = -1, z_col = -1;
    int vertex_props = 0;
    std::string current_element;
    bool saw_format = false;
    while (true) {
        if (!reader.next(tok)) throw ParseError("unterminated ply header", reader.line());
        if (tok[0] == "end_header") break;
        if (tok[0] == "format") {
            if (tok.size() < 2) throw ParseError("bad format line", reader.line());
            if (tok[1] != "ascii")
                throw UnsupportedFormatError("binary PLY is not supported (format '" + tok[1] +
                                             "')");
            saw_format = true;
        } else if (tok[0] == "element") {
            if (tok.size() < 3) throw ParseError("bad element line", reader.line());
            current_element = tok[1];
            if (tok[1] == "vertex") nv = parse_int(tok[2], reader.line());
            else if (tok[1] == "face") nf = parse_int(tok[2], reader.line());
        } else if (tok[0] == "property" && current_element == "vertex") {
            if (tok.size() >= 3) {
                if (tok.back() == "x") x_col = vertex_props;
                if (tok.back() == "y") y_col = vertex_props;
                if (tok.back() == "z") z_col = vertex_props;
            }
            ++vertex_props;
        }
    }
    if (!saw_format) throw ParseError("ply header missing format line", reader.line());
    if (nv < 0 || nf < 0) throw ParseError("ply header missing vertex or face element",
                                           reader.line());
    if (x_col < 0 || y_col < 0 || z_col < 0)
        throw ParseError("ply vertex element missing x/y/z properties", reader.line());

    Eigen::MatrixX3d vertices(nv, 3);
    for (long i = 0; i < nv; ++i) {
        if (!reader.next(tok) || static_cast<int>(tok.size()) < vertex_props)
            throw ParseError("truncated ply vertex line", reader.line());
        vertices(i, 0) = parse_double(tok[static_cast<std::size_t>(x_col)], reader.line());
        vertices(i, 1) = parse_double(tok[static_cast<std::size_t>(y_col)], reader.line());
        vertices(i, 2) = parse_double(tok[static_cast<std::size_t>(z_col)], reader.line());
    }
    Eigen::MatrixX3i faces(nf, 3);
    for (long i = 0; i < nf; ++i) {
        if (!reader.next(tok) || tok.empty())
            throw ParseError("truncated ply face line", reader.line());
        const long arity = parse_int(tok[0], reader.line());
        if (arity != 3)
            throw ParseError("only triangle faces are supported, got arity " +
                                 std::to_string(arity),
                             reader.line());
        if (tok.size() < 4) throw ParseError("truncated ply face line", reader.line());
        for (int c = 0; c < 3; ++c)
            faces(i, c) = static_cast<int>(parse_int(tok[c + 1], reader.line()));
    }
    return TriangleMesh::create(std::move(vertices), std::move(faces), name);
}

inline std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline TriangleMesh load_mesh(const std::string& path, MeshFormat format) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open " + path);
    const std::string name = std::filesystem::path(path).stem().string();
    switch (format) {
        case MeshFormat::OFF: return detail::load_off(is, name);
        case MeshFormat::OBJ: return detail::load_obj(is, name);
        case MeshFormat::PLY: return detail::load_ply(is, name);
    }
    throw ParseError("unknown format");
}

inline TriangleMesh load_mesh(const std::string& path) {
    return load_mesh(path, format_from_path(path));
}

inline void save_mesh(const TriangleMesh& mesh, const std::string& path, MeshFormat format) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot open " + path + " for writing");
    const auto& V = mesh.vertices();
    const auto& F = mesh.faces();
    switch (format) {
        case MeshFormat::OFF:
            os << "OFF\n" << V.rows() << ' ' << F.rows() << " 0\n";
            for (Eigen::Index i = 0; i < V.rows(); ++i)
                os << detail::format_coord(V(i, 0)) << ' ' << detail::format_coord(V(i, 1)) << ' '
                   << detail::format_coord(V(i, 2)) << '\n';
            for (Eigen::Index f = 0; f < F.rows(); ++f)
                os << "3 " << F(f, 0) << ' ' << F(f, 1) << ' ' << F(f, 2) << '\n';
            break;
        case MeshFormat::OBJ:
            for (Eigen::Index i = 0; i < V.rows(); ++i)
                os << "v " << detail::format_coord(V(i, 0)) << ' '
                   << detail::format_coord(V(i, 1)) << ' ' << detail::format_coord(V(i, 2))
                   << '\n';
            for (Eigen::Index f = 0; f < F.rows(); ++f)
                os << "f " << F(f, 0) + 1 << ' ' << F(f, 1) + 1 << ' ' << F(f, 2) + 1 << '\n';
            break;
        case MeshFormat::PLY:
            os << "ply\nformat ascii 1.0\n";
            os << "element vertex " << V.rows() << '\n';
            os << "property double x\nproperty double y\nproperty double z\n";
            os << "element face " << F.rows() << '\n';
            os << "property list uchar int vertex_indices\nend_header\n";
            for (Eigen::Index i = 0; i < V.rows(); ++i)
                os << detail::format_coord(V(i, 0)) << ' ' << detail::format_coord(V(i, 1)) << ' '
                   << detail::format_coord(V(i, 2)) << '\n';
            for (Eigen::Index f = 0; f < F.rows(); ++f)
                os << "3 " << F(f, 0) << ' ' << F(f, 1) << ' ' << F(f, 2) << '\n';
            break;
    }
    if (!os) throw ParseError("write failed for " + path);
}

inline void save_mesh(const TriangleMesh& mesh, const std::string& path) {
    save_mesh(mesh, path, format_from_path(path));
}

/// Symmetry sidecar: "#duo-sym v1 n=<n> orientation=<s>" then one image index per line.
inline void save_symmetry(const SelfSymmetry& sym, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot open " + path + " for writing");
    os << "#duo-sym v1 n=" << sym.permutation.size() << " orientation=" << sym.orientation
       << '\n';
    for (int img : sym.permutation) os << img << '\n';
    if (!os) throw ParseError("write failed for " + path);
}

inline SelfSymmetry load_symmetry(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open " + path);
    std::string header;
    if (!std::getline(is, header) || header.rfind("#duo-sym v1 ", 0) != 0)
        throw ParseError("missing #duo-sym v1 header", 1);
    SelfSymmetry sym;
    std::size_t n = 0;
    {
        std::istringstream ss(header.substr(11));
        std::string field;
        while (ss >> field) {
            if (field.rfind("n=", 0) == 0) n = std::stoul(field.substr(2));
            if (field.rfind("orientation=", 0) == 0) sym.orientation = std::stoi(field.substr(12));
        }
    }
    sym.permutation.reserve(n);
    long value = 0;
    while (is >> value) sym.permutation.push_back(static_cast<int>(value));
    if (sym.permutation.size() != n)
        throw ParseError("symmetry file lists " + std::to_string(sym.permutation.size()) +
                         " entries, header says " + std::to_string(n));
    return sym;
}

} // namespace duofm

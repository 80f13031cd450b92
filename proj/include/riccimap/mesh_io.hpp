#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "riccimap/mesh.hpp"

namespace riccimap {

enum class MeshFormat { OBJ, PLY };

namespace detail {

inline std::string shortest_double(double x)
{
    // %.17g round-trips any double through text.
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline bool parse_double(const std::string& tok, double& out)
{
    std::size_t pos = 0;
    try {
        out = std::stod(tok, &pos);
    } catch (...) {
        return false;
    }
    return pos == tok.size();
}

inline bool parse_int(const std::string& tok, long& out)
{
    std::size_t pos = 0;
    try {
        out = std::stol(tok, &pos);
    } catch (...) {
        return false;
    }
    return pos == tok.size();
}

inline std::vector<std::string> split_ws(const std::string& line)
{
    std::vector<std::string> toks;
    std::istringstream is(line);
    std::string t;
    while (is >> t) toks.push_back(t);
    return toks;
}

}  // namespace detail

inline TriMesh load_obj(std::istream& in)
{
    std::vector<Vec3> verts;
    std::vector<Color> colors;
    std::vector<std::array<int, 3>> faces;
    std::string line;
    int lineno = 0;
    bool any_color = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = detail::split_ws(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        const std::string where = " at line " + std::to_string(lineno);
        if (toks[0] == "v") {
            if (toks.size() != 4 && toks.size() != 7)
                throw ParseError("OBJ: vertex needs 3 or 6 components" + where);
            double x, y, z;
            if (!detail::parse_double(toks[1], x) || !detail::parse_double(toks[2], y) ||
                !detail::parse_double(toks[3], z))
                throw ParseError("OBJ: bad vertex coordinate" + where);
            verts.emplace_back(x, y, z);
            if (toks.size() == 7) {
                double r, g, b;
                if (!detail::parse_double(toks[4], r) || !detail::parse_double(toks[5], g) ||
                    !detail::parse_double(toks[6], b))
                    throw ParseError("OBJ: bad vertex color" + where);
                // Colors may be given as 0..1 floats or 0..255 values.
                double s = (r <= 1.0 && g <= 1.0 && b <= 1.0) ? 255.0 : 1.0;
                auto q = [s](double x) {
                    return static_cast<std::uint8_t>(std::lround(std::clamp(x * s, 0.0, 255.0)));
                };
                colors.push_back({q(r), q(g), q(b)});
                any_color = true;
            } else {
                colors.push_back({0, 0, 0});
            }
        } else if (toks[0] == "f") {
            if (toks.size() != 4) throw ParseError("OBJ: only triangular faces supported" + where);
            std::array<int, 3> tri{};
            for (int c = 0; c < 3; ++c) {
                std::string ref = toks[c + 1];
                auto slash = ref.find('/');
                if (slash != std::string::npos) ref = ref.substr(0, slash);
                long idx;
                if (!detail::parse_int(ref, idx)) throw ParseError("OBJ: bad face index" + where);
                if (idx < 0) idx = static_cast<long>(verts.size()) + 1 + idx;  // negative = relative
                if (idx < 1 || idx > static_cast<long>(verts.size()))
                    throw ParseError("OBJ: face index " + ref + " out of range (1-based)" + where);
                tri[c] = static_cast<int>(idx - 1);
            }
            faces.push_back(tri);
        }
        // vt/vn/usemtl etc. ignored
    }
    if (!any_color) colors.clear();
    return TriMesh::build(std::move(verts), std::move(faces), std::move(colors));
}

inline TriMesh load_ply(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || detail::split_ws(line) != std::vector<std::string>{"ply"})
        throw ParseError("PLY: missing 'ply' magic");

    long nverts = -1, nfaces = -1;
    std::vector<std::string> vertex_props;
    std::string current_element;
    bool header_done = false;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = detail::split_ws(line);
        if (toks.empty() || toks[0] == "comment") continue;
        if (toks[0] == "format") {
            if (toks.size() < 2 || toks[1] != "ascii") throw ParseError("PLY: only ascii format supported");
        } else if (toks[0] == "element") {
            if (toks.size() != 3) throw ParseError("PLY: bad element line " + std::to_string(lineno));
            current_element = toks[1];
            long n;
            if (!detail::parse_int(toks[2], n) || n < 0) throw ParseError("PLY: bad element count");
            if (toks[1] == "vertex") nverts = n;
            else if (toks[1] == "face") nfaces = n;
        } else if (toks[0] == "property") {
            if (current_element == "vertex") {
                if (toks.size() < 3) throw ParseError("PLY: bad property line " + std::to_string(lineno));
                vertex_props.push_back(toks.back());
            }
        } else if (toks[0] == "end_header") {
            header_done = true;
            break;
        } else {
            throw ParseError("PLY: unexpected header line " + std::to_string(lineno));
        }
    }
    if (!header_done || nverts < 0 || nfaces < 0)
        throw ParseError("PLY: incomplete header");

    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    for (std::size_t p = 0; p < vertex_props.size(); ++p) {
        const auto& name = vertex_props[p];
        if (name == "x") ix = static_cast<int>(p);
        else if (name == "y") iy = static_cast<int>(p);
        else if (name == "z") iz = static_cast<int>(p);
        else if (name == "red") ir = static_cast<int>(p);
        else if (name == "green") ig = static_cast<int>(p);
        else if (name == "blue") ib = static_cast<int>(p);
    }
    if (ix < 0 || iy < 0 || iz < 0) throw ParseError("PLY: vertex element lacks x/y/z");
    const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;

    std::vector<Vec3> verts;
    std::vector<Color> colors;
    verts.reserve(nverts);
    for (long v = 0; v < nverts; ++v) {
        if (!std::getline(in, line)) throw ParseError("PLY: truncated vertex list");
        ++lineno;
        auto toks = detail::split_ws(line);
        if (toks.size() < vertex_props.size())
            throw ParseError("PLY: short vertex line " + std::to_string(lineno));
        double x, y, z;
        if (!detail::parse_double(toks[ix], x) || !detail::parse_double(toks[iy], y) ||
            !detail::parse_double(toks[iz], z))
            throw ParseError("PLY: bad vertex coordinate at line " + std::to_string(lineno));
        verts.emplace_back(x, y, z);
        if (has_color) {
            long r, g, b;
            if (!detail::parse_int(toks[ir], r) || !detail::parse_int(toks[ig], g) ||
                !detail::parse_int(toks[ib], b) || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
                throw ParseError("PLY: bad vertex color at line " + std::to_string(lineno));
            colors.push_back({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                              static_cast<std::uint8_t>(b)});
        }
    }

    std::vector<std::array<int, 3>> faces;
    faces.reserve(nfaces);
    for (long f = 0; f < nfaces; ++f) {
        if (!std::getline(in, line)) throw ParseError("PLY: truncated face list");
        ++lineno;
        auto toks = detail::split_ws(line);
        long n;
        if (toks.empty() || !detail::parse_int(toks[0], n))
            throw ParseError("PLY: bad face line " + std::to_string(lineno));
        if (n != 3) throw ParseError("PLY: only triangular faces supported, line " + std::to_string(lineno));
        if (toks.size() < 4) throw ParseError("PLY: short face line " + std::to_string(lineno));
        std::array<int, 3> tri{};
        for (int c = 0; c < 3; ++c) {
            long idx;
            if (!detail::parse_int(toks[c + 1], idx) || idx < 0 || idx >= nverts)
                throw ParseError("PLY: face index out of range at line " + std::to_string(lineno));
            tri[c] = static_cast<int>(idx);
        }
        faces.push_back(tri);
    }
    return TriMesh::build(std::move(verts), std::move(faces), std::move(colors));
}

inline TriMesh load_mesh(const std::string& path, MeshFormat format)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return format == MeshFormat::OBJ ? load_obj(in) : load_ply(in);
}

/// Format inferred from the file extension (.obj / .ply).
inline TriMesh load_mesh(const std::string& path)
{
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(ch));
    if (ext == ".obj") return load_mesh(path, MeshFormat::OBJ);
    if (ext == ".ply") return load_mesh(path, MeshFormat::PLY);
    throw ParseError("unrecognized mesh extension: " + path);
}

inline void save_obj(const TriMesh& mesh, std::ostream& out)
{
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const auto& p = mesh.vertex(v);
        out << "v " << detail::shortest_double(p.x()) << ' ' << detail::shortest_double(p.y()) << ' '
            << detail::shortest_double(p.z());
        if (mesh.has_colors()) {
            const auto& c = mesh.colors()[v];
            out << ' ' << detail::shortest_double(c[0] / 255.0) << ' '
                << detail::shortest_double(c[1] / 255.0) << ' ' << detail::shortest_double(c[2] / 255.0);
        }
        out << '\n';
    }
    for (const auto& f : mesh.faces())
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

inline void save_obj(const TriMesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    save_obj(mesh, out);
}

inline void save_ply(const TriMesh& mesh, std::ostream& out)
{
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertex_count() << '\n';
    out << "property float x\nproperty float y\nproperty float z\n";
    if (mesh.has_colors())
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "element face " << mesh.face_count() << '\n';
    out << "property list uchar int vertex_indices\nend_header\n";
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const auto& p = mesh.vertex(v);
        out << detail::shortest_double(p.x()) << ' ' << detail::shortest_double(p.y()) << ' '
            << detail::shortest_double(p.z());
        if (mesh.has_colors()) {
            const auto& c = mesh.colors()[v];
            out << ' ' << int(c[0]) << ' ' << int(c[1]) << ' ' << int(c[2]);
        }
        out << '\n';
    }
    for (const auto& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

inline void save_ply(const TriMesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    save_ply(mesh, out);
}

/// PGM (P2 or P5) depth reader; a sample equal to the maximum gray value is
/// treated as missing.
inline DepthGrid load_depth_pgm(const std::string& path, double spacing = 1.0,
                                double depth_scale = 1.0)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5") throw ParseError("PGM: bad magic in " + path);
    auto next_token = [&in, &path]() {
        std::string t;
        for (;;) {
            if (!(in >> t)) throw ParseError("PGM: truncated header in " + path);
            if (t[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return t;
        }
    };
    long w, h, maxval;
    if (!detail::parse_int(next_token(), w) || !detail::parse_int(next_token(), h) ||
        !detail::parse_int(next_token(), maxval) || w < 1 || h < 1 || maxval < 1 || maxval > 65535)
        throw ParseError("PGM: bad header in " + path);

    DepthGrid grid;
    grid.width = static_cast<int>(w);
    grid.height = static_cast<int>(h);
    grid.spacing = spacing;
    grid.samples.resize(w * h);
    if (magic == "P2") {
        for (long i = 0; i < w * h; ++i) {
            long v;
            std::string t;
            if (!(in >> t) || !detail::parse_int(t, v) || v < 0 || v > maxval)
                throw ParseError("PGM: bad sample in " + path);
            grid.samples[i] = v == maxval ? DepthGrid::MISSING : v * depth_scale;
        }
    } else {
        in.get();  // single whitespace after maxval
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(w * h * bytes);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.size()))
            throw ParseError("PGM: truncated pixel data in " + path);
        for (long i = 0; i < w * h; ++i) {
            long v = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
            grid.samples[i] = v == maxval ? DepthGrid::MISSING : v * depth_scale;
        }
    }
    grid.validate();
    return grid;
}

/// CSV depth reader: one row per line, empty cells are missing.
inline DepthGrid load_depth_csv(const std::string& path, double spacing = 1.0)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == EOF) break;
        std::vector<double> row;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            // trim
            auto b = cell.find_first_not_of(" \t");
            auto e = cell.find_last_not_of(" \t");
            cell = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
            if (cell.empty()) {
                row.push_back(DepthGrid::MISSING);
            } else {
                double v;
                if (!detail::parse_double(cell, v)) throw ParseError("CSV: bad cell '" + cell + "' in " + path);
                row.push_back(v);
            }
        }
        if (!line.empty() && line.back() == ',') row.push_back(DepthGrid::MISSING);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("CSV: empty file " + path);
    DepthGrid grid;
    grid.height = static_cast<int>(rows.size());
    grid.width = static_cast<int>(rows[0].size());
    grid.spacing = spacing;
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != grid.width) throw ParseError("CSV: ragged rows in " + path);
        grid.samples.insert(grid.samples.end(), r.begin(), r.end());
    }
    grid.validate();
    return grid;
}

}  // namespace riccimap

#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "riccimap/embedding.hpp"
#include "riccimap/mesh.hpp"

namespace riccimap {

enum class ScalarQuantity {
    GAUSS_CURVATURE_DEFICIT,
    GAUSS_CURVATURE_WEIGHTED,
    CONFORMAL_FACTOR,
    DEPTH,
};

enum class VectorQuantity { NORMAL };

struct VertexScalars {
    std::vector<double> values;
    ScalarQuantity quantity;
};

struct VertexVectors {
    std::vector<Vec3> values;
    VectorQuantity quantity;
};

using FaceCornerAngles = std::vector<std::array<double, 3>>;

/// Corner angles of every face from prescribed edge lengths (law of cosines).
/// lengths is indexed like mesh.edges(); angles[f][c] is the angle at corner c
/// of face f.
inline FaceCornerAngles corner_angles_from_lengths(const TriMesh& mesh,
                                                   const std::vector<double>& lengths)
{
    FaceCornerAngles angles(mesh.face_count());
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& fe = mesh.face_edges()[f];
        // opp[c] is the length of the edge opposite corner c
        const double a = lengths[fe[0]], b = lengths[fe[1]], c = lengths[fe[2]];
        if (!(a + b > c && b + c > a && c + a > b))
            throw DegenerateFaceError("face " + std::to_string(f) + " violates the triangle inequality");
        auto angle = [](double opp, double s1, double s2) {
            double cosv = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
            return std::acos(std::clamp(cosv, -1.0, 1.0));
        };
        angles[f][0] = angle(a, b, c);
        angles[f][1] = angle(b, c, a);
        angles[f][2] = angle(c, a, b);
        for (double th : angles[f])
            if (!(th > 0.0 && th < std::numbers::pi))
                throw DegenerateFaceError("face " + std::to_string(f) + " has a degenerate corner angle");
    }
    return angles;
}

inline FaceCornerAngles corner_angles(const TriMesh& mesh)
{
    return corner_angles_from_lengths(mesh, mesh.edge_lengths());
}

/// Angle-deficit Gaussian curvature from prescribed lengths: 2*pi minus the
/// incident angle sum at interior vertices, pi minus it on the boundary.
inline std::vector<double> angle_deficit_from_lengths(const TriMesh& mesh,
                                                      const std::vector<double>& lengths)
{
    auto angles = corner_angles_from_lengths(mesh, lengths);
    std::vector<double> deficit(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v)
        deficit[v] = mesh.is_boundary_vertex(v) ? std::numbers::pi : 2.0 * std::numbers::pi;
    for (int f = 0; f < mesh.face_count(); ++f)
        for (int c = 0; c < 3; ++c) deficit[mesh.face(f)[c]] -= angles[f][c];
    return deficit;
}

inline VertexScalars angle_deficit_curvature(const TriMesh& mesh)
{
    return {angle_deficit_from_lengths(mesh, mesh.edge_lengths()),
            ScalarQuantity::GAUSS_CURVATURE_DEFICIT};
}

inline double face_area_3d(const TriMesh& mesh, int f)
{
    const auto& t = mesh.face(f);
    return 0.5 * (mesh.vertex(t[1]) - mesh.vertex(t[0]))
                     .cross(mesh.vertex(t[2]) - mesh.vertex(t[0]))
                     .norm();
}

/// Area-weighted angle-deficit curvature: deficit scaled by 3 / (2 * one-ring area).
inline VertexScalars weighted_curvature(const TriMesh& mesh)
{
    auto deficit = angle_deficit_from_lengths(mesh, mesh.edge_lengths());
    std::vector<double> areas(mesh.face_count());
    for (int f = 0; f < mesh.face_count(); ++f) {
        areas[f] = face_area_3d(mesh, f);
        if (!(areas[f] > 0.0)) throw DegenerateFaceError("face " + std::to_string(f) + " has zero area");
    }
    std::vector<double> k(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        double ring = 0.0;
        for (int f : mesh.vertex_faces()[v]) ring += areas[f];
        if (!(ring > 0.0)) throw DegenerateFaceError("vertex " + std::to_string(v) + " has empty one-ring");
        k[v] = deficit[v] * 3.0 / (2.0 * ring);
    }
    return {std::move(k), ScalarQuantity::GAUSS_CURVATURE_WEIGHTED};
}

/// Per-vertex unit normals: face normals averaged with corner-angle times
/// face-area weights.
inline VertexVectors vertex_normals(const TriMesh& mesh)
{
    auto angles = corner_angles(mesh);
    std::vector<Vec3> acc(mesh.vertex_count(), Vec3::Zero());
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& t = mesh.face(f);
        Vec3 n = (mesh.vertex(t[1]) - mesh.vertex(t[0])).cross(mesh.vertex(t[2]) - mesh.vertex(t[0]));
        double area2 = n.norm();  // 2 * area
        if (!(area2 > 0.0)) throw DegenerateFaceError("face " + std::to_string(f) + " has zero area");
        Vec3 unit = n / area2;
        double area = 0.5 * area2;
        for (int c = 0; c < 3; ++c) acc[t[c]] += angles[f][c] * area * unit;
    }
    std::vector<Vec3> normals(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        double len = acc[v].norm();
        if (len < 1e-12) throw ZeroNormalError("vertex " + std::to_string(v) + " has vanishing normal sum");
        normals[v] = acc[v] / len;
    }
    return {std::move(normals), VectorQuantity::NORMAL};
}

/// Per-vertex conformal factor: one-ring area in 3D over one-ring area in the
/// embedding.
inline VertexScalars conformal_factors(const TriMesh& mesh, const PlanarEmbedding& emb)
{
    if (static_cast<int>(emb.uv.size()) != mesh.vertex_count())
        throw DimensionMismatchError("embedding does not cover all vertices");
    std::vector<double> a3(mesh.face_count()), a2(mesh.face_count());
    for (int f = 0; f < mesh.face_count(); ++f) {
        a3[f] = face_area_3d(mesh, f);
        a2[f] = embedded_face_area(emb, mesh, f);
    }
    std::vector<double> cf(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        double ring3 = 0.0, ring2 = 0.0;
        for (int f : mesh.vertex_faces()[v]) {
            ring3 += a3[f];
            ring2 += a2[f];
        }
        if (!(ring2 > 0.0))
            throw DegenerateFaceError("non-positive 2D one-ring area at vertex " + std::to_string(v));
        cf[v] = ring3 / ring2;
    }
    return {std::move(cf), ScalarQuantity::CONFORMAL_FACTOR};
}

struct DistortionStats {
    std::vector<double> per_face;  // sigma1/sigma2, >= 1 for orientation-preserving faces
    double mean = 0.0;
    double max = 0.0;
    int flipped = 0;
};

/// Quasi-conformal distortion: per-face singular-value ratio of the linear map
/// from the isometrically flattened 3D triangle to its embedded image.
inline DistortionStats qc_distortion(const TriMesh& mesh, const PlanarEmbedding& emb)
{
    if (static_cast<int>(emb.uv.size()) != mesh.vertex_count())
        throw DimensionMismatchError("embedding does not cover all vertices");
    DistortionStats stats;
    stats.per_face.resize(mesh.face_count());
    double sum = 0.0;
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& t = mesh.face(f);
        Vec3 e1 = mesh.vertex(t[1]) - mesh.vertex(t[0]);
        Vec3 e2 = mesh.vertex(t[2]) - mesh.vertex(t[0]);
        double l1 = e1.norm();
        if (!(l1 > 0.0)) throw DegenerateFaceError("face " + std::to_string(f) + " is degenerate in 3D");
        Vec3 u = e1 / l1;
        Vec3 w = e2 - e2.dot(u) * u;
        double l2 = w.norm();
        if (!(l2 > 0.0)) throw DegenerateFaceError("face " + std::to_string(f) + " is degenerate in 3D");
        // source triangle laid isometrically in the plane
        Eigen::Matrix2d S;
        S << l1, e2.dot(u), 0.0, l2;
        Eigen::Matrix2d T;
        T.col(0) = emb.uv[t[1]] - emb.uv[t[0]];
        T.col(1) = emb.uv[t[2]] - emb.uv[t[0]];
        Eigen::Matrix2d J = T * S.inverse();
        if (J.determinant() <= 0.0) ++stats.flipped;
        // singular values of a 2x2 in closed form
        double e = 0.5 * (J(0, 0) + J(1, 1)), h = 0.5 * (J(0, 0) - J(1, 1));
        double g = 0.5 * (J(1, 0) + J(0, 1)), q = 0.5 * (J(1, 0) - J(0, 1));
        double s1 = std::hypot(e, q) + std::hypot(h, g);
        double s2 = std::abs(std::hypot(e, q) - std::hypot(h, g));
        double ratio = s1 / std::max(s2, s1 * 1e-12);
        stats.per_face[f] = ratio;
        sum += ratio;
        stats.max = std::max(stats.max, ratio);
    }
    stats.mean = sum / std::max(1, mesh.face_count());
    return stats;
}

inline void export_csv(const VertexScalars& s, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "vertex_index,value\n";
    for (std::size_t v = 0; v < s.values.size(); ++v) out << v << ',' << s.values[v] << '\n';
}

inline void export_csv(const VertexVectors& s, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "vertex_index,x,y,z\n";
    for (std::size_t v = 0; v < s.values.size(); ++v)
        out << v << ',' << s.values[v].x() << ',' << s.values[v].y() << ',' << s.values[v].z() << '\n';
}

}  // namespace riccimap

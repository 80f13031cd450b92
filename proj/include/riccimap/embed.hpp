#pragma once

#include <cmath>
#include <complex>
#include <queue>
#include <string>
#include <vector>

#include "riccimap/embedding.hpp"
#include "riccimap/mesh_io.hpp"
#include "riccimap/ricci.hpp"

namespace riccimap {

namespace detail {

inline int pick_seed_face(const TriMesh& mesh)
{
    Vec3 center = mesh.centroid();
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& t = mesh.face(f);
        Vec3 c = (mesh.vertex(t[0]) + mesh.vertex(t[1]) + mesh.vertex(t[2])) / 3.0;
        double d = (c - center).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = f;
        }
    }
    return best;
}

/// Intersection of circles (c1,r1) and (c2,r2) on the side making triangle
/// (p, q, r) positively oriented. Near-tangent configurations within a 1e-6
/// relative defect collapse onto the center line.
inline Vec2 place_by_circles(const Vec2& c1, const Vec2& c2, double r1, double r2)
{
    double d = (c2 - c1).norm();
    if (!(d > 0.0)) throw LayoutError("coincident circle centers in layout");
    double a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    double h2 = r1 * r1 - a * a;
    double h;
    if (h2 >= 0.0) {
        h = std::sqrt(h2);
    } else {
        double tol = 1e-6 * (r1 + r2);
        bool far_miss = d > r1 + r2 && d - (r1 + r2) < tol;
        bool contained = d < std::abs(r1 - r2) && std::abs(r1 - r2) - d < tol;
        if (!far_miss && !contained)
            throw LayoutError("circles fail to intersect (metric inconsistency)");
        h = 0.0;
    }
    Vec2 ex = (c2 - c1) / d;
    Vec2 ey(-ex.y(), ex.x());
    return c1 + a * ex + h * ey;  // caller orients the pair (c1,c2) so +ey is correct
}

}  // namespace detail

/// Breadth-first planar layout of a converged flat circle packing metric.
inline PlanarEmbedding layout(const TriMesh& mesh, const CirclePackingMetric& metric,
                              double curvature_tol = 1e-3)
{
    auto lengths = edge_lengths(mesh, metric);
    auto deficits = angle_deficit_from_lengths(mesh, lengths);
    for (int v = 0; v < mesh.vertex_count(); ++v)
        if (!mesh.is_boundary_vertex(v) && std::abs(deficits[v]) > curvature_tol)
            throw NonConvergedMetricError("interior curvature " + std::to_string(deficits[v]) +
                                          " at vertex " + std::to_string(v) + " exceeds layout tolerance");

    PlanarEmbedding emb;
    emb.source = EmbeddingSource::CONFORMAL;
    emb.seed_face = detail::pick_seed_face(mesh);
    emb.uv.assign(mesh.vertex_count(), Vec2::Zero());
    std::vector<std::uint8_t> placed(mesh.vertex_count(), 0);

    auto face_length = [&](int f, int va, int vb) {
        return lengths[mesh.edge_index(va, vb)];
    };

    {  // seed face
        const auto& t = mesh.face(emb.seed_face);
        double lij = face_length(emb.seed_face, t[0], t[1]);
        double ljk = face_length(emb.seed_face, t[1], t[2]);
        double lki = face_length(emb.seed_face, t[2], t[0]);
        double cosi = std::clamp((lij * lij + lki * lki - ljk * ljk) / (2.0 * lij * lki), -1.0, 1.0);
        double sini = std::sqrt(std::max(0.0, 1.0 - cosi * cosi));
        emb.uv[t[0]] = Vec2(0.0, 0.0);
        emb.uv[t[1]] = Vec2(lij, 0.0);
        emb.uv[t[2]] = Vec2(lki * cosi, lki * sini);
        placed[t[0]] = placed[t[1]] = placed[t[2]] = 1;
    }

    std::vector<std::uint8_t> visited(mesh.face_count(), 0);
    std::queue<int> frontier;
    visited[emb.seed_face] = 1;
    frontier.push(emb.seed_face);
    while (!frontier.empty()) {
        int f = frontier.front();
        frontier.pop();
        const auto& t = mesh.face(f);
        // place the unplaced corner, if any, from its two placed neighbors
        int unplaced = -1, n_placed = 0;
        for (int c = 0; c < 3; ++c) {
            if (placed[t[c]]) ++n_placed;
            else unplaced = c;
        }
        if (n_placed == 2) {
            int p = t[(unplaced + 1) % 3];  // cyclic order (p, q, r=unplaced)
            int q = t[(unplaced + 2) % 3];
            int r = t[unplaced];
            // positive orientation of (p, q, r) means r lies left of p->q
            emb.uv[r] = detail::place_by_circles(emb.uv[p], emb.uv[q], face_length(f, p, r),
                                                 face_length(f, q, r));
            placed[r] = 1;
        } else if (n_placed < 2) {
            throw LayoutError("face " + std::to_string(f) + " reached with fewer than 2 placed vertices");
        }
        for (int e : mesh.face_edges()[f]) {
            for (int g : mesh.edge_faces()[e]) {
                if (g >= 0 && !visited[g]) {
                    visited[g] = 1;
                    frontier.push(g);
                }
            }
        }
    }
    for (int v = 0; v < mesh.vertex_count(); ++v)
        if (!placed[v]) throw LayoutError("vertex " + std::to_string(v) + " was never placed");
    return emb;
}

/// Projection baseline: drop the z coordinate.
inline PlanarEmbedding orthographic(const TriMesh& mesh)
{
    PlanarEmbedding emb;
    emb.source = EmbeddingSource::ORTHOGRAPHIC;
    emb.uv.reserve(mesh.vertex_count());
    for (const auto& p : mesh.vertices()) emb.uv.emplace_back(p.x(), p.y());
    return emb;
}

/// Largest relative deviation between embedded edge lengths and the metric's
/// induced lengths.
inline double max_edge_length_residual(const TriMesh& mesh, const CirclePackingMetric& metric,
                                       const PlanarEmbedding& emb)
{
    auto lengths = edge_lengths(mesh, metric);
    double worst = 0.0;
    for (int e = 0; e < mesh.edge_count(); ++e) {
        const auto& ev = mesh.edges()[e];
        double l2d = (emb.uv[ev[0]] - emb.uv[ev[1]]).norm();
        worst = std::max(worst, std::abs(l2d - lengths[e]) / lengths[e]);
    }
    return worst;
}

/// Residual of the best planar similarity (rotation, scale, translation; no
/// reflection) mapping a onto b, as an RMS normalized by b's spread.
inline double similarity_procrustes_residual(const std::vector<Vec2>& a, const std::vector<Vec2>& b)
{
    if (a.size() != b.size() || a.empty()) throw DimensionMismatchError("point sets differ in size");
    using Cplx = std::complex<double>;
    const auto n = static_cast<double>(a.size());
    Cplx ma(0, 0), mb(0, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += Cplx(a[i].x(), a[i].y());
        mb += Cplx(b[i].x(), b[i].y());
    }
    ma /= n;
    mb /= n;
    Cplx num(0, 0);
    double den = 0.0, spread = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        Cplx za = Cplx(a[i].x(), a[i].y()) - ma;
        Cplx zb = Cplx(b[i].x(), b[i].y()) - mb;
        num += std::conj(za) * zb;
        den += std::norm(za);
        spread += std::norm(zb);
    }
    if (den == 0.0 || spread == 0.0) throw DegenerateConfigurationError("degenerate point set");
    Cplx s = num / den;  // optimal complex scale/rotation
    double err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        Cplx za = Cplx(a[i].x(), a[i].y()) - ma;
        Cplx zb = Cplx(b[i].x(), b[i].y()) - mb;
        err += std::norm(s * za - zb);
    }
    return std::sqrt(err / spread);
}

/// Write an embedding as an OBJ with uv in x,y and z = 0.
inline void export_embedding_obj(const TriMesh& mesh, const PlanarEmbedding& emb,
                                 const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    for (int v = 0; v < mesh.vertex_count(); ++v)
        out << "v " << detail::shortest_double(emb.uv[v].x()) << ' '
            << detail::shortest_double(emb.uv[v].y()) << " 0\n";
    for (const auto& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

}  // namespace riccimap

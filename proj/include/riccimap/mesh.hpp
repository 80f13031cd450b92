#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "riccimap/exceptions.hpp"

namespace riccimap {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Color = std::array<std::uint8_t, 3>;

/// Indexed triangle mesh with adjacency. Construct through TriMesh::build,
/// which validates manifoldness, connectivity, and disk topology; instances
/// are immutable afterwards.
class TriMesh {
public:
    static TriMesh build(std::vector<Vec3> vertices,
                         std::vector<std::array<int, 3>> faces,
                         std::vector<Color> colors = {})
    {
        TriMesh m;
        m.vertices_ = std::move(vertices);
        m.faces_ = std::move(faces);
        m.colors_ = std::move(colors);
        if (!m.colors_.empty() && m.colors_.size() != m.vertices_.size())
            throw TopologyError("color count does not match vertex count");
        m.finalize();
        return m;
    }

    int vertex_count() const { return static_cast<int>(vertices_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    int face_count() const { return static_cast<int>(faces_.size()); }

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& faces() const { return faces_; }
    const std::vector<Color>& colors() const { return colors_; }
    bool has_colors() const { return !colors_.empty(); }

    const Vec3& vertex(int v) const { return vertices_[v]; }
    const std::array<int, 3>& face(int f) const { return faces_[f]; }

    bool is_boundary_vertex(int v) const { return boundary_flags_[v] != 0; }
    const std::vector<std::uint8_t>& boundary_flags() const { return boundary_flags_; }

    /// Edges as sorted vertex pairs (lo, hi).
    const std::vector<std::array<int, 2>>& edges() const { return edges_; }
    /// Edge indices of face f, opposite each corner: face_edges()[f][c] is the
    /// edge not containing face(f)[c].
    const std::vector<std::array<int, 3>>& face_edges() const { return face_edges_; }
    /// Faces incident to each vertex, in ascending face-index order.
    const std::vector<std::vector<int>>& vertex_faces() const { return vertex_faces_; }
    /// The one or two faces on each edge; second entry is -1 on the boundary.
    const std::vector<std::array<int, 2>>& edge_faces() const { return edge_faces_; }

    int edge_index(int a, int b) const
    {
        auto it = edge_map_.find(edge_key(a, b));
        return it == edge_map_.end() ? -1 : it->second;
    }

    bool is_boundary_edge(int e) const { return edge_face_count_[e] == 1; }

    double edge_length(int e) const
    {
        return (vertices_[edges_[e][0]] - vertices_[edges_[e][1]]).norm();
    }

    /// Edge lengths taken from the 3D embedding, indexed like edges().
    std::vector<double> edge_lengths() const
    {
        std::vector<double> l(edges_.size());
        for (std::size_t e = 0; e < edges_.size(); ++e)
            l[e] = edge_length(static_cast<int>(e));
        return l;
    }

    Vec3 centroid() const
    {
        Vec3 c = Vec3::Zero();
        for (const auto& p : vertices_) c += p;
        return c / static_cast<double>(vertices_.size());
    }

    /// The single boundary loop, in the orientation induced by the faces,
    /// starting at the lowest-index boundary vertex.
    std::vector<int> boundary_loop() const { return boundary_loop_; }

private:
    static std::uint64_t edge_key(int a, int b)
    {
        auto lo = static_cast<std::uint64_t>(std::min(a, b));
        auto hi = static_cast<std::uint64_t>(std::max(a, b));
        return (lo << 32) | hi;
    }

    void finalize()
    {
        const int nv = static_cast<int>(vertices_.size());
        const int nf = static_cast<int>(faces_.size());
        if (nv < 3 || nf < 1) throw TopologyError("mesh needs at least 3 vertices and 1 face");

        for (const auto& p : vertices_)
            if (!p.allFinite()) throw TopologyError("non-finite vertex position");

        // Undirected edge table plus a directed-edge multiplicity check for
        // orientation consistency.
        std::unordered_map<std::uint64_t, int> directed;
        vertex_faces_.assign(nv, {});
        face_edges_.assign(nf, {-1, -1, -1});
        for (int f = 0; f < nf; ++f) {
            const auto& t = faces_[f];
            for (int c = 0; c < 3; ++c) {
                if (t[c] < 0 || t[c] >= nv)
                    throw TopologyError("face " + std::to_string(f) + " references out-of-range vertex " +
                                        std::to_string(t[c]));
            }
            if (t[0] == t[1] || t[1] == t[2] || t[2] == t[0])
                throw TopologyError("face " + std::to_string(f) + " has repeated vertices");
            for (int c = 0; c < 3; ++c) {
                int a = t[c], b = t[(c + 1) % 3];
                std::uint64_t dk = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
                if (!directed.emplace(dk, f).second)
                    throw TopologyError("inconsistent orientation or non-manifold at edge (" +
                                        std::to_string(a) + "," + std::to_string(b) + "), face " +
                                        std::to_string(f));
                auto [it, inserted] = edge_map_.emplace(edge_key(a, b), static_cast<int>(edges_.size()));
                if (inserted) {
                    edges_.push_back({std::min(a, b), std::max(a, b)});
                    edge_face_count_.push_back(0);
                    edge_faces_.push_back({-1, -1});
                }
                int e = it->second;
                edge_faces_[e][edge_face_count_[e] == 0 ? 0 : 1] = f;
                if (++edge_face_count_[e] > 2)
                    throw TopologyError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                        ") shared by more than 2 faces");
                face_edges_[f][(c + 2) % 3] = e;  // edge opposite corner c+2
                vertex_faces_[t[c]].push_back(f);
            }
        }

        for (std::size_t e = 0; e < edges_.size(); ++e)
            if (edge_length(static_cast<int>(e)) <= 0.0)
                throw TopologyError("zero-length edge (" + std::to_string(edges_[e][0]) + "," +
                                    std::to_string(edges_[e][1]) + ")");

        // Connectivity over vertices via edges.
        {
            std::vector<std::vector<int>> adj(nv);
            for (const auto& e : edges_) {
                adj[e[0]].push_back(e[1]);
                adj[e[1]].push_back(e[0]);
            }
            std::vector<std::uint8_t> seen(nv, 0);
            std::vector<int> stack{0};
            seen[0] = 1;
            int count = 1;
            while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                for (int w : adj[v])
                    if (!seen[w]) {
                        seen[w] = 1;
                        ++count;
                        stack.push_back(w);
                    }
            }
            if (count != nv) throw TopologyError("mesh is disconnected");
        }

        int euler = nv - static_cast<int>(edges_.size()) + nf;
        if (euler != 1)
            throw TopologyError("mesh is not a topological disk (V-E+F = " + std::to_string(euler) + ")");

        trace_boundary(directed);
    }

    void trace_boundary(const std::unordered_map<std::uint64_t, int>& directed)
    {
        const int nv = static_cast<int>(vertices_.size());
        boundary_flags_.assign(nv, 0);
        // A directed edge a->b is on the boundary when b->a does not exist.
        std::unordered_map<int, int> next;  // boundary successor along face orientation
        int n_boundary_edges = 0;
        for (const auto& [dk, f] : directed) {
            int a = static_cast<int>(dk >> 32);
            int b = static_cast<int>(dk & 0xffffffffu);
            std::uint64_t rev = (static_cast<std::uint64_t>(b) << 32) | static_cast<std::uint64_t>(a);
            if (directed.find(rev) == directed.end()) {
                if (!next.emplace(a, b).second)
                    throw TopologyError("non-manifold boundary at vertex " + std::to_string(a));
                boundary_flags_[a] = 1;
                boundary_flags_[b] = 1;
                ++n_boundary_edges;
            }
        }
        if (next.empty()) throw TopologyError("mesh has no boundary");

        int start = std::numeric_limits<int>::max();
        for (const auto& [a, b] : next) start = std::min(start, a);
        boundary_loop_.clear();
        int v = start;
        do {
            boundary_loop_.push_back(v);
            auto it = next.find(v);
            if (it == next.end()) throw TopologyError("open boundary chain at vertex " + std::to_string(v));
            v = it->second;
        } while (v != start && static_cast<int>(boundary_loop_.size()) <= n_boundary_edges);
        if (static_cast<int>(boundary_loop_.size()) != n_boundary_edges)
            throw TopologyError("mesh has more than one boundary loop");
    }

    std::vector<Vec3> vertices_;
    std::vector<std::array<int, 3>> faces_;
    std::vector<Color> colors_;
    std::vector<std::uint8_t> boundary_flags_;
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<int, 2>> edge_faces_;
    std::vector<int> edge_face_count_;
    std::unordered_map<std::uint64_t, int> edge_map_;
    std::vector<std::array<int, 3>> face_edges_;
    std::vector<std::vector<int>> vertex_faces_;
    std::vector<int> boundary_loop_;
};

/// Regular depth grid; missing samples are NaN.
struct DepthGrid {
    int width = 0;
    int height = 0;
    double spacing = 1.0;
    std::vector<double> samples;       // row-major, NaN = missing
    std::vector<Color> colors;         // empty or one per pixel

    static constexpr double MISSING = std::numeric_limits<double>::quiet_NaN();

    bool present(int row, int col) const { return !std::isnan(samples[row * width + col]); }
    double at(int row, int col) const { return samples[row * width + col]; }

    void validate() const
    {
        if (width < 2 || height < 2) throw ParseError("depth grid must be at least 2x2");
        if (static_cast<int>(samples.size()) != width * height)
            throw ParseError("depth grid sample count mismatch");
        if (!(spacing > 0.0)) throw ParseError("depth grid spacing must be positive");
        for (double d : samples)
            if (!std::isnan(d) && !std::isfinite(d)) throw ParseError("non-finite depth sample");
        if (!colors.empty() && colors.size() != samples.size())
            throw ParseError("depth grid color count mismatch");
    }
};

inline std::vector<int> boundary_loop(const TriMesh& mesh) { return mesh.boundary_loop(); }

/// One vertex per present pixel at (col*spacing, row*spacing, depth); every
/// fully-present 2x2 block becomes two triangles split along its NW-SE
/// diagonal, wound counterclockwise in the xy plane.
inline TriMesh mesh_from_depth(const DepthGrid& grid)
{
    grid.validate();
    std::vector<int> vid(static_cast<std::size_t>(grid.width) * grid.height, -1);
    std::vector<Vec3> verts;
    std::vector<Color> colors;
    for (int r = 0; r < grid.height; ++r)
        for (int c = 0; c < grid.width; ++c)
            if (grid.present(r, c)) {
                vid[r * grid.width + c] = static_cast<int>(verts.size());
                verts.emplace_back(c * grid.spacing, r * grid.spacing, grid.at(r, c));
                if (!grid.colors.empty()) colors.push_back(grid.colors[r * grid.width + c]);
            }

    std::vector<std::array<int, 3>> faces;
    for (int r = 0; r + 1 < grid.height; ++r)
        for (int c = 0; c + 1 < grid.width; ++c) {
            int nw = vid[r * grid.width + c];
            int ne = vid[r * grid.width + c + 1];
            int sw = vid[(r + 1) * grid.width + c];
            int se = vid[(r + 1) * grid.width + c + 1];
            if (nw < 0 || ne < 0 || sw < 0 || se < 0) continue;
            faces.push_back({nw, se, sw});
            faces.push_back({nw, ne, se});
        }
    if (!grid.colors.empty())
        return TriMesh::build(std::move(verts), std::move(faces), std::move(colors));
    return TriMesh::build(std::move(verts), std::move(faces));
}

}  // namespace riccimap

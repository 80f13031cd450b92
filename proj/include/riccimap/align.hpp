#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "riccimap/mesh.hpp"

namespace riccimap {

struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    RigidTransform inverse() const
    {
        RigidTransform inv;
        inv.rotation = rotation.transpose();
        inv.translation = -(rotation.transpose() * translation);
        return inv;
    }

    RigidTransform compose(const RigidTransform& first) const
    {
        // (*this) after `first`
        RigidTransform out;
        out.rotation = rotation * first.rotation;
        out.translation = rotation * first.translation + translation;
        return out;
    }
};

inline void to_json(nlohmann::json& j, const RigidTransform& t)
{
    std::vector<double> rot;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.push_back(t.rotation(r, c));
    j = nlohmann::json{{"rotation_row_major", rot},
                       {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

inline void from_json(const nlohmann::json& j, RigidTransform& t)
{
    auto rot = j.at("rotation_row_major").get<std::vector<double>>();
    auto tr = j.at("translation").get<std::vector<double>>();
    if (rot.size() != 9 || tr.size() != 3) throw FormatError("bad rigid transform JSON");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot[r * 3 + c];
    t.translation = Vec3(tr[0], tr[1], tr[2]);
}

namespace detail {

/// Uniform hash grid over a point set for nearest-neighbor queries.
class PointGrid {
public:
    PointGrid(const std::vector<Vec3>& points, double cell) : points_(points), cell_(cell)
    {
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto [x, y, z] = coords(points[i]);
            lo_[0] = std::min(lo_[0], x);
            lo_[1] = std::min(lo_[1], y);
            lo_[2] = std::min(lo_[2], z);
            hi_[0] = std::max(hi_[0], x);
            hi_[1] = std::max(hi_[1], y);
            hi_[2] = std::max(hi_[2], z);
            cells_[pack(x, y, z)].push_back(static_cast<int>(i));
        }
    }

    int nearest(const Vec3& q) const
    {
        auto [cx, cy, cz] = coords(q);
        int max_ring = 0;
        max_ring = std::max(max_ring, std::max(cx - lo_[0], hi_[0] - cx));
        max_ring = std::max(max_ring, std::max(cy - lo_[1], hi_[1] - cy));
        max_ring = std::max(max_ring, std::max(cz - lo_[2], hi_[2] - cz));
        int best = -1;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (int ring = 0; ring <= max_ring; ++ring) {
            // cells in shell m are at Euclidean distance >= (m-1)*cell, so the
            // unscanned shells (>= ring) cannot beat best_d <= (ring-1)*cell
            if (best >= 0 && std::sqrt(best_d2) <= static_cast<double>(ring - 1) * cell_) break;
            for (int dx = -ring; dx <= ring; ++dx)
                for (int dy = -ring; dy <= ring; ++dy)
                    for (int dz = -ring; dz <= ring; ++dz) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                        auto it = cells_.find(pack(cx + dx, cy + dy, cz + dz));
                        if (it == cells_.end()) continue;
                        for (int i : it->second) {
                            double d2 = (points_[i] - q).squaredNorm();
                            if (d2 < best_d2) {
                                best_d2 = d2;
                                best = i;
                            }
                        }
                    }
        }
        return best;
    }

private:
    std::tuple<int, int, int> coords(const Vec3& p) const
    {
        return {static_cast<int>(std::floor(p.x() / cell_)), static_cast<int>(std::floor(p.y() / cell_)),
                static_cast<int>(std::floor(p.z() / cell_))};
    }
    static std::uint64_t pack(int x, int y, int z)
    {
        auto u = [](int v) { return static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) & 0x1fffff; };
        return (u(x) << 42) | (u(y) << 21) | u(z);
    }
    std::uint64_t key(const Vec3& p) const
    {
        auto [x, y, z] = coords(p);
        return pack(x, y, z);
    }

    const std::vector<Vec3>& points_;
    double cell_;
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
    int lo_[3] = {std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
                  std::numeric_limits<int>::max()};
    int hi_[3] = {std::numeric_limits<int>::min(), std::numeric_limits<int>::min(),
                  std::numeric_limits<int>::min()};
};

/// Closed-form least-squares rigid fit taking src[i] onto dst[i].
inline RigidTransform procrustes_fit(const std::vector<Vec3>& src, const std::vector<Vec3>& dst)
{
    const auto n = static_cast<double>(src.size());
    Vec3 ms = Vec3::Zero(), md = Vec3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        ms += src[i];
        md += dst[i];
    }
    ms /= n;
    md /= n;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) cov += (src[i] - ms) * (dst[i] - md).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues()(1) < 1e-12 * std::max(1.0, svd.singularValues()(0)))
        throw DegenerateConfigurationError("rank-deficient cross-covariance in rigid fit");
    Eigen::Matrix3d U = svd.matrixU(), V = svd.matrixV();
    Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
    if ((V * U.transpose()).determinant() < 0.0) S(2, 2) = -1.0;
    RigidTransform t;
    t.rotation = V * S * U.transpose();
    t.translation = md - t.rotation * ms;
    return t;
}

}  // namespace detail

struct IcpResult {
    RigidTransform transform;
    double rms = 0.0;
    int iterations = 0;
    std::vector<double> rms_history;
};

/// Classical point-to-point rigid ICP of source onto reference. Nearest
/// neighbors come from a uniform grid with cell size twice the reference's
/// mean edge length.
inline IcpResult icp_align(const TriMesh& source, const TriMesh& reference, int max_iters = 50,
                           double tol = 1e-8)
{
    double mean_edge = 0.0;
    for (int e = 0; e < reference.edge_count(); ++e) mean_edge += reference.edge_length(e);
    mean_edge /= std::max(1, reference.edge_count());
    detail::PointGrid grid(reference.vertices(), 2.0 * mean_edge);

    IcpResult result;
    std::vector<Vec3> moved = source.vertices();
    // initialize by centroid alignment so large offsets do not push the first
    // correspondence search onto a rim of the reference
    Vec3 cs = Vec3::Zero(), cr = Vec3::Zero();
    for (const auto& p : moved) cs += p;
    for (const auto& p : reference.vertices()) cr += p;
    cs /= static_cast<double>(moved.size());
    cr /= static_cast<double>(reference.vertex_count());
    result.transform.translation = cr - cs;
    for (auto& p : moved) p += result.transform.translation;
    double prev_rms = std::numeric_limits<double>::infinity();
    std::vector<Vec3> dst(moved.size());
    for (int iter = 0; iter < max_iters; ++iter) {
        for (std::size_t i = 0; i < moved.size(); ++i) {
            int j = grid.nearest(moved[i]);
            if (j < 0) throw DegenerateConfigurationError("nearest-neighbor query failed");
            dst[i] = reference.vertex(j);
        }
        RigidTransform step = detail::procrustes_fit(moved, dst);
        double sq = 0.0;
        for (std::size_t i = 0; i < moved.size(); ++i) {
            moved[i] = step.apply(moved[i]);
            sq += (moved[i] - dst[i]).squaredNorm();
        }
        result.transform = step.compose(result.transform);
        result.rms = std::sqrt(sq / static_cast<double>(moved.size()));
        result.rms_history.push_back(result.rms);
        ++result.iterations;
        if (std::abs(prev_rms - result.rms) < tol) break;
        prev_rms = result.rms;
    }
    return result;
}

/// Returns a copy of the mesh with vertices mapped through the transform;
/// connectivity, colors, and flags are untouched.
inline TriMesh apply_transform(const TriMesh& mesh, const RigidTransform& t)
{
    std::vector<Vec3> verts;
    verts.reserve(mesh.vertex_count());
    for (const auto& p : mesh.vertices()) verts.push_back(t.apply(p));
    return TriMesh::build(std::move(verts), mesh.faces(), mesh.colors());
}

}  // namespace riccimap

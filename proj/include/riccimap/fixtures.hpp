#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "riccimap/align.hpp"
#include "riccimap/mesh.hpp"
#include "riccimap/mesh_io.hpp"

namespace riccimap {
namespace fixtures {

/// Flat n x n grid in the z = 0 plane, unit spacing.
inline TriMesh flat_grid(int n)
{
    DepthGrid grid;
    grid.width = grid.height = n;
    grid.spacing = 1.0;
    grid.samples.assign(static_cast<std::size_t>(n) * n, 0.0);
    return mesh_from_depth(grid);
}

namespace detail {

/// Hex-pattern disk triangulation: m concentric rings with 6j vertices on ring
/// j; vertex count is 1 + 3m(m+1). Positions come from place(j, phi) where j
/// is the ring index (0 = center) and phi the angle of the vertex on its ring.
template <typename PlaceFn>
inline TriMesh hex_disk(int rings, PlaceFn place)
{
    std::vector<Vec3> verts;
    std::vector<int> ring_start;
    verts.push_back(place(0, 0.0));
    ring_start.push_back(0);
    for (int j = 1; j <= rings; ++j) {
        ring_start.push_back(static_cast<int>(verts.size()));
        for (int k = 0; k < 6 * j; ++k) {
            double phi = 2.0 * std::numbers::pi * k / (6 * j);
            verts.push_back(place(j, phi));
        }
    }
    std::vector<std::array<int, 3>> faces;
    for (int k = 0; k < 6; ++k) faces.push_back({0, ring_start[1] + k, ring_start[1] + (k + 1) % 6});
    for (int j = 1; j < rings; ++j) {
        int n1 = 6 * j, n2 = 6 * (j + 1);
        auto inner = [&](int idx) { return ring_start[j] + ((idx % n1) + n1) % n1; };
        auto outer = [&](int idx) { return ring_start[j + 1] + ((idx % n2) + n2) % n2; };
        for (int s = 0; s < 6; ++s) {
            for (int t = 0; t < j; ++t) {
                faces.push_back({outer(s * (j + 1) + t), outer(s * (j + 1) + t + 1), inner(s * j + t)});
                faces.push_back({outer(s * (j + 1) + t + 1), inner(s * j + t + 1), inner(s * j + t)});
            }
            faces.push_back({outer(s * (j + 1) + j), outer(s * (j + 1) + j + 1), inner(s * j + j)});
        }
    }
    return TriMesh::build(std::move(verts), std::move(faces));
}

}  // namespace detail

/// Cap of the unit sphere around the +z pole, polar angle up to theta_max.
inline TriMesh spherical_cap(int rings, double theta_max = std::numbers::pi / 3.0)
{
    return detail::hex_disk(rings, [&](int j, double phi) {
        double theta = theta_max * j / rings;
        return Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                    std::cos(theta));
    });
}

/// Square pyramid with four equilateral faces: unit base, apex at height
/// 1/sqrt(2). The apex is the single interior vertex.
inline TriMesh square_pyramid()
{
    std::vector<Vec3> verts = {
        {-0.5, -0.5, 0.0}, {0.5, -0.5, 0.0}, {0.5, 0.5, 0.0}, {-0.5, 0.5, 0.0},
        {0.0, 0.0, 1.0 / std::numbers::sqrt2},
    };
    std::vector<std::array<int, 3>> faces = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
    return TriMesh::build(std::move(verts), std::move(faces));
}

inline double face_height(double x, double y)
{
    auto bump = [](double dx, double dy, double sx, double sy) {
        return std::exp(-(dx * dx / sx + dy * dy / sy));
    };
    return 0.22 * bump(x, y, 1.2, 1.2)                       // overall dome
           + 0.16 * bump(x, y + 0.15, 0.06, 0.10)           // nose
           + 0.06 * bump(x, y - 0.55, 0.30, 0.02)           // brow ridge
           + 0.05 * bump(x - 0.45, y - 0.05, 0.08, 0.08)    // cheeks
           + 0.05 * bump(x + 0.45, y - 0.05, 0.08, 0.08)
           + 0.04 * bump(x, y + 0.70, 0.10, 0.03);          // chin
}

/// Smooth synthetic face-like height field on an n x n grid over [-1, 1]^2,
/// with a mild skin-tone color ramp.
inline TriMesh synthetic_face(int n)
{
    DepthGrid grid;
    grid.width = grid.height = n;
    grid.spacing = 2.0 / (n - 1);
    grid.samples.resize(static_cast<std::size_t>(n) * n);
    grid.colors.resize(grid.samples.size());
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double x = -1.0 + 2.0 * c / (n - 1);
            double y = -1.0 + 2.0 * r / (n - 1);
            double z = face_height(x, y);
            grid.samples[r * n + c] = z;
            auto tone = static_cast<std::uint8_t>(std::clamp(170.0 + 250.0 * z, 0.0, 255.0));
            grid.colors[r * n + c] = {tone, static_cast<std::uint8_t>(tone * 3 / 4),
                                      static_cast<std::uint8_t>(tone / 2)};
        }
    return mesh_from_depth(grid);
}

/// Face-like height field sampled on a hex-pattern unit disk. Unlike the
/// square-footprint synthetic_face, a rotation about z maps the boundary
/// circle onto itself, which keeps rigid alignment free of footprint-overhang
/// bias.
inline TriMesh disk_face(int rings)
{
    return detail::hex_disk(rings, [&](int j, double phi) {
        double r = static_cast<double>(j) / rings;
        double x = r * std::cos(phi), y = r * std::sin(phi);
        return Vec3(x, y, face_height(x, y));
    });
}

/// Registration target: a steep ridge plus an off-center bump on a disk
/// footprint. Point-to-point ICP slides tangentially on smooth, nearly
/// symmetric height fields (the dome of face_height stalls several degrees
/// from the optimum); the sharp asymmetric relief here locks all six rigid
/// degrees of freedom, so known transforms up to ~20 degrees are recovered to
/// machine precision.
inline TriMesh icp_target(int n)
{
    DepthGrid grid;
    grid.width = grid.height = n;
    grid.spacing = 2.0 / (n - 1);
    grid.samples.assign(static_cast<std::size_t>(n) * n, DepthGrid::MISSING);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double x = -1.0 + 2.0 * c / (n - 1);
            double y = -1.0 + 2.0 * r / (n - 1);
            if (x * x + y * y > 0.98 * 0.98) continue;
            grid.samples[r * n + c] =
                0.5 * std::exp(-x * x / 0.03) * std::exp(-y * y / 0.5) +
                0.35 * std::exp(-((x - 0.55) * (x - 0.55) + (y - 0.35) * (y - 0.35)) / 0.03);
        }
    return mesh_from_depth(grid);
}

inline TriMesh rotated(const TriMesh& mesh, const Vec3& axis, double degrees)
{
    RigidTransform t;
    t.rotation = Eigen::AngleAxisd(degrees * std::numbers::pi / 180.0, axis.normalized()).matrix();
    return apply_transform(mesh, t);
}

/// Write the standard fixture set as OBJ files into dir (no trailing slash).
inline std::vector<std::string> write_all(const std::string& dir)
{
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const TriMesh& mesh) {
        std::string path = dir + "/" + name;
        save_obj(mesh, path);
        written.push_back(path);
    };
    emit("grid5.obj", flat_grid(5));
    emit("grid50.obj", flat_grid(50));
    emit("cap_coarse.obj", spherical_cap(9));
    emit("cap.obj", spherical_cap(18));
    emit("hemisphere.obj", spherical_cap(18, std::numbers::pi / 2.0));
    emit("pyramid.obj", square_pyramid());
    emit("face.obj", synthetic_face(50));
    emit("face_profile.obj", rotated(synthetic_face(50), Vec3(1, 0, 0), 90.0));
    emit("cap_rot30.obj", rotated(spherical_cap(18), Vec3(0, 1, 0), 30.0));
    emit("icp_target.obj", icp_target(41));
    return written;
}

}  // namespace fixtures
}  // namespace riccimap

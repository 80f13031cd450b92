#include <doctest.h>

#include <cmath>
#include <sstream>

#include "riccimap/fixtures.hpp"
#include "riccimap/mesh.hpp"
#include "riccimap/mesh_io.hpp"

using namespace riccimap;

namespace {

DepthGrid constant_grid(int w, int h, double depth, double spacing = 1.0)
{
    DepthGrid g;
    g.width = w;
    g.height = h;
    g.spacing = spacing;
    g.samples.assign(static_cast<std::size_t>(w) * h, depth);
    return g;
}

void check_disk(const TriMesh& m)
{
    CHECK(m.vertex_count() - m.edge_count() + m.face_count() == 1);
    auto loop = m.boundary_loop();
    int n_boundary = 0;
    for (int v = 0; v < m.vertex_count(); ++v)
        if (m.is_boundary_vertex(v)) ++n_boundary;
    CHECK(static_cast<int>(loop.size()) == n_boundary);
}

}  // namespace

TEST_CASE("smallest valid disk mesh from OBJ")
{
    std::istringstream obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    TriMesh m = load_obj(obj);
    CHECK(m.vertex_count() == 3);
    CHECK(m.edge_count() == 3);
    CHECK(m.face_count() == 1);
    for (int v = 0; v < 3; ++v) CHECK(m.is_boundary_vertex(v));
    CHECK_FALSE(m.has_colors());
}

TEST_CASE("OBJ face index 0 is a grammar violation")
{
    std::istringstream obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n");
    CHECK_THROWS_AS(load_obj(obj), ParseError);
}

TEST_CASE("OBJ face index past the vertex list")
{
    std::istringstream obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n");
    CHECK_THROWS_AS(load_obj(obj), ParseError);
}

TEST_CASE("PLY with inconsistent winding across a shared edge")
{
    // both faces traverse the shared edge 1->2 in the same direction
    std::istringstream ply(
        "ply\nformat ascii 1.0\n"
        "element vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
        "element face 2\nproperty list uchar int vertex_indices\nend_header\n"
        "0 0 0\n1 0 0\n1 1 0\n0 1 0\n"
        "3 0 1 2\n3 1 2 3\n");
    CHECK_THROWS_AS(load_ply(ply), TopologyError);
}

TEST_CASE("PLY round trip with colors")
{
    std::vector<Vec3> verts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0.5}};
    std::vector<Color> colors = {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}};
    TriMesh m = TriMesh::build(verts, {{0, 1, 2}}, colors);
    std::stringstream buf;
    save_ply(m, buf);
    TriMesh back = load_ply(buf);
    REQUIRE(back.has_colors());
    CHECK(back.colors() == colors);
    for (int v = 0; v < 3; ++v) CHECK(back.vertex(v) == m.vertex(v));
}

TEST_CASE("mesh_from_depth minimal block")
{
    TriMesh m = mesh_from_depth(constant_grid(2, 2, 0.0));
    CHECK(m.vertex_count() == 4);
    CHECK(m.face_count() == 2);
    check_disk(m);
}

TEST_CASE("mesh_from_depth rejects an annulus")
{
    auto g = constant_grid(3, 3, 0.0);
    g.samples[4] = DepthGrid::MISSING;
    CHECK_THROWS_AS(mesh_from_depth(g), TopologyError);
}

TEST_CASE("mesh_from_depth counts on a 10x10 parabolic sheet")
{
    auto g = constant_grid(10, 10, 0.0);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c) g.samples[r * 10 + c] = c * c / 50.0;
    TriMesh m = mesh_from_depth(g);
    CHECK(m.vertex_count() == 100);
    CHECK(m.face_count() == 162);  // 2*(n-1)^2
    check_disk(m);
    CHECK(m.boundary_loop().size() == 36);  // 4*(n-1)
}

TEST_CASE("boundary loop of a single triangle follows the face order")
{
    TriMesh m = TriMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    CHECK(m.boundary_loop() == std::vector<int>{0, 1, 2});
}

TEST_CASE("boundary loop of a 3x3 grid is its 8 perimeter vertices in cyclic order")
{
    TriMesh m = fixtures::flat_grid(3);
    auto loop = m.boundary_loop();
    REQUIRE(loop.size() == 8);
    CHECK_FALSE(std::count(loop.begin(), loop.end(), 4));  // center vertex excluded
    // cyclic: consecutive loop vertices are joined by boundary edges
    for (std::size_t i = 0; i < loop.size(); ++i) {
        int e = m.edge_index(loop[i], loop[(i + 1) % loop.size()]);
        REQUIRE(e >= 0);
        CHECK(m.is_boundary_edge(e));
    }
}

TEST_CASE("fully present grids triangulate completely")
{
    for (auto [w, h] : {std::pair{2, 5}, {7, 3}, {6, 6}}) {
        TriMesh m = mesh_from_depth(constant_grid(w, h, 1.5, 0.25));
        CHECK(m.face_count() == 2 * (w - 1) * (h - 1));
        check_disk(m);
    }
}

TEST_CASE("OBJ save/load round trip is exact")
{
    TriMesh m = fixtures::synthetic_face(12);
    std::stringstream buf;
    save_obj(m, buf);
    TriMesh back = load_obj(buf);
    REQUIRE(back.vertex_count() == m.vertex_count());
    for (int v = 0; v < m.vertex_count(); ++v) {
        CHECK(back.vertex(v).x() == m.vertex(v).x());
        CHECK(back.vertex(v).y() == m.vertex(v).y());
        CHECK(back.vertex(v).z() == m.vertex(v).z());
    }
    CHECK(back.faces() == m.faces());
    CHECK(back.colors() == m.colors());
}

TEST_CASE("build rejects broken topology")
{
    SUBCASE("repeated vertex in face")
    {
        CHECK_THROWS_AS(TriMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 1}}), TopologyError);
    }
    SUBCASE("out of range index")
    {
        CHECK_THROWS_AS(TriMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 5}}), TopologyError);
    }
    SUBCASE("duplicate vertex position makes a zero-length edge")
    {
        CHECK_THROWS_AS(TriMesh::build({{0, 0, 0}, {0, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}), TopologyError);
    }
    SUBCASE("two triangles sharing only a vertex")
    {
        CHECK_THROWS_AS(TriMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}},
                                       {{0, 1, 2}, {0, 3, 4}}),
                        TopologyError);
    }
    SUBCASE("disconnected components")
    {
        CHECK_THROWS_AS(TriMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 5, 5}, {6, 5, 5}, {5, 6, 5}},
                                       {{0, 1, 2}, {3, 4, 5}}),
                        TopologyError);
    }
}

TEST_CASE("every fixture is a disk")
{
    check_disk(fixtures::flat_grid(5));
    check_disk(fixtures::spherical_cap(6));
    check_disk(fixtures::spherical_cap(10, std::numbers::pi / 2.0));
    check_disk(fixtures::square_pyramid());
    check_disk(fixtures::synthetic_face(20));
}

TEST_CASE("spherical cap vertex count and boundary ring")
{
    TriMesh cap = fixtures::spherical_cap(18);
    CHECK(cap.vertex_count() == 1 + 3 * 18 * 19);  // 1027
    CHECK(cap.boundary_loop().size() == 6 * 18);
}

TEST_CASE("PGM and CSV depth readers")
{
    SUBCASE("P2 with missing as maxval")
    {
        std::string path = "test_depth.pgm";
        {
            std::ofstream out(path);
            out << "P2\n# comment\n3 2\n255\n1 2 3\n4 255 6\n";
        }
        DepthGrid g = load_depth_pgm(path, 0.5);
        CHECK(g.width == 3);
        CHECK(g.height == 2);
        CHECK(g.at(0, 2) == 3.0);
        CHECK(std::isnan(g.at(1, 1)));
        CHECK(g.spacing == 0.5);
        std::remove(path.c_str());
    }
    SUBCASE("CSV with empty cells")
    {
        std::string path = "test_depth.csv";
        {
            std::ofstream out(path);
            out << "1,2,3\n4,,6\n";
        }
        DepthGrid g = load_depth_csv(path);
        CHECK(g.width == 3);
        CHECK(g.height == 2);
        CHECK(std::isnan(g.at(1, 1)));
        CHECK(g.at(1, 2) == 6.0);
        std::remove(path.c_str());
    }
}

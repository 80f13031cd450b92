#include <doctest.h>

#include <cmath>
#include <numbers>

#include "riccimap/embed.hpp"
#include "riccimap/fixtures.hpp"

using namespace riccimap;
using std::numbers::pi;

namespace {

CirclePackingMetric metric_from_lengths(const TriMesh& m)
{
    // tangential-style metric carrying the mesh's own 3D lengths exactly is
    // not always possible; for layout tests we just reuse the initializer
    return init_circle_packing(m);
}

}  // namespace

TEST_CASE("seed face layout of a 3-4-5 triangle")
{
    TriMesh m = TriMesh::build({{0, 0, 0}, {3, 0, 0}, {3, 4, 0}}, {{0, 1, 2}});
    // metric with phi = pi/2 and radii chosen to induce exactly l = 3, 4, 5
    // solve gamma_i^2 + gamma_j^2 = l_ij^2: gamma^2 = (9 + 25 - 16)/2 = 9, 0, 16
    // -> not strictly positive, so drive the real pipeline instead: flow the
    // init metric (single triangle has no interior, already converged)
    auto metric = metric_from_lengths(m);
    auto [flowed, report] = ricci_flow(m, metric, 1e-6, 10, FlowMode::NEWTON);
    CHECK(report.converged);
    auto emb = layout(m, flowed);
    auto l = edge_lengths(m, flowed);
    // seed corner at origin, second vertex on +x, third in upper half plane
    CHECK(emb.uv[0].x() == doctest::Approx(0.0));
    CHECK(emb.uv[0].y() == doctest::Approx(0.0));
    CHECK(emb.uv[1].y() == doctest::Approx(0.0));
    CHECK(emb.uv[1].x() == doctest::Approx(l[m.edge_index(0, 1)]).epsilon(1e-12));
    CHECK(emb.uv[2].y() > 0.0);
}

TEST_CASE("hand-computed two-circle seed: lengths 3, 5, 4 place v_k at (3, 4)")
{
    // independent law-of-cosines oracle for the seed formula itself
    double lij = 3, lki = 5, ljk = 4;
    double cosi = (lij * lij + lki * lki - ljk * ljk) / (2 * lij * lki);
    double sini = std::sqrt(1 - cosi * cosi);
    CHECK(lki * cosi == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(lki * sini == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("flat grid lays out congruent to itself")
{
    TriMesh m = fixtures::flat_grid(5);
    auto [flowed, report] = ricci_flow(m, init_circle_packing(m), 1e-6, 10, FlowMode::NEWTON);
    REQUIRE(report.converged);
    auto emb = layout(m, flowed);
    for (int e = 0; e < m.edge_count(); ++e) {
        const auto& ev = m.edges()[e];
        double l2d = (emb.uv[ev[0]] - emb.uv[ev[1]]).norm();
        CHECK(l2d == doctest::Approx(m.edge_length(e)).epsilon(1e-9));
    }
    CHECK(count_flipped_faces(m, emb) == 0);
}

TEST_CASE("spherical cap layout: no flips, tight edge-length residual")
{
    TriMesh m = fixtures::spherical_cap(12);
    auto [flowed, report] = ricci_flow(m, init_circle_packing(m), 1e-6, 100, FlowMode::NEWTON);
    REQUIRE(report.converged);
    auto emb = layout(m, flowed);
    CHECK(emb.source == EmbeddingSource::CONFORMAL);
    CHECK(count_flipped_faces(m, emb) == 0);
    CHECK(max_edge_length_residual(m, flowed, emb) < 1e-4);
    for (const auto& p : emb.uv) CHECK(p.allFinite());
}

TEST_CASE("layout refuses a non-converged metric")
{
    TriMesh m = fixtures::spherical_cap(8);
    auto metric = init_circle_packing(m);  // strongly curved
    CHECK_THROWS_AS(layout(m, metric), NonConvergedMetricError);
}

TEST_CASE("layout is deterministic")
{
    TriMesh m = fixtures::spherical_cap(8);
    auto [flowed, report] = ricci_flow(m, init_circle_packing(m), 1e-6, 100, FlowMode::NEWTON);
    REQUIRE(report.converged);
    auto e1 = layout(m, flowed);
    auto e2 = layout(m, flowed);
    CHECK(e1.seed_face == e2.seed_face);
    for (int v = 0; v < m.vertex_count(); ++v) CHECK(e1.uv[v] == e2.uv[v]);
}

TEST_CASE("orthographic projection")
{
    SUBCASE("flat mesh: uv equals (x, y) exactly")
    {
        TriMesh m = fixtures::flat_grid(4);
        auto emb = orthographic(m);
        CHECK(emb.source == EmbeddingSource::ORTHOGRAPHIC);
        for (int v = 0; v < m.vertex_count(); ++v) {
            CHECK(emb.uv[v].x() == m.vertex(v).x());
            CHECK(emb.uv[v].y() == m.vertex(v).y());
        }
        auto d = qc_distortion(m, emb);
        for (double r : d.per_face) CHECK(r == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("hemisphere: conformal layout beats projection on mean distortion")
    {
        TriMesh m = fixtures::spherical_cap(12, pi / 2.0);
        auto [flowed, report] = ricci_flow(m, init_circle_packing(m), 1e-6, 100, FlowMode::NEWTON);
        REQUIRE(report.converged);
        auto conf = qc_distortion(m, layout(m, flowed));
        auto orth = qc_distortion(m, orthographic(m));
        CHECK(conf.mean < orth.mean);
    }
    SUBCASE("profile view: flipped or collapsed faces are detected")
    {
        TriMesh m = fixtures::rotated(fixtures::synthetic_face(15), Vec3(1, 0, 0), 90.0);
        auto emb = orthographic(m);
        CHECK(count_flipped_faces(m, emb) > 0);
    }
}

TEST_CASE("conformal layout is pose-insensitive, orthographic is not")
{
    TriMesh m = fixtures::spherical_cap(10);
    TriMesh rot = fixtures::rotated(m, Vec3(0, 1, 0), 30.0);
    auto [f1, r1] = ricci_flow(m, init_circle_packing(m), 1e-9, 100, FlowMode::NEWTON);
    auto [f2, r2] = ricci_flow(rot, init_circle_packing(rot), 1e-9, 100, FlowMode::NEWTON);
    REQUIRE(r1.converged);
    REQUIRE(r2.converged);
    auto e1 = layout(m, f1);
    auto e2 = layout(rot, f2);
    CHECK(similarity_procrustes_residual(e1.uv, e2.uv) < 1e-6);
    CHECK(similarity_procrustes_residual(orthographic(m).uv, orthographic(rot).uv) > 1e-2);
}

TEST_CASE("embedding OBJ export has uv in x,y and zero z")
{
    TriMesh m = fixtures::flat_grid(3);
    auto emb = orthographic(m);
    std::string path = "test_embed_export.obj";
    export_embedding_obj(m, emb, path);
    TriMesh back = load_mesh(path);
    for (int v = 0; v < m.vertex_count(); ++v) {
        CHECK(back.vertex(v).x() == emb.uv[v].x());
        CHECK(back.vertex(v).y() == emb.uv[v].y());
        CHECK(back.vertex(v).z() == 0.0);
    }
    std::remove(path.c_str());
}

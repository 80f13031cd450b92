#pragma once

#include <vector>

#include "riccimap/mesh.hpp"

namespace riccimap {

enum class EmbeddingSource { CONFORMAL, ORTHOGRAPHIC };

/// Per-vertex planar coordinates paired with how they were produced.
struct PlanarEmbedding {
    std::vector<Vec2> uv;
    EmbeddingSource source = EmbeddingSource::ORTHOGRAPHIC;
    int seed_face = -1;  // CONFORMAL only
};

inline double signed_area_2d(const Vec2& a, const Vec2& b, const Vec2& c)
{
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

inline double embedded_face_area(const PlanarEmbedding& emb, const TriMesh& mesh, int f)
{
    const auto& t = mesh.face(f);
    return signed_area_2d(emb.uv[t[0]], emb.uv[t[1]], emb.uv[t[2]]);
}

inline int count_flipped_faces(const TriMesh& mesh, const PlanarEmbedding& emb)
{
    int flips = 0;
    for (int f = 0; f < mesh.face_count(); ++f)
        if (embedded_face_area(emb, mesh, f) <= 0.0) ++flips;
    return flips;
}

}  // namespace riccimap

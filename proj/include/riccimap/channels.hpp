#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "riccimap/embedding.hpp"
#include "riccimap/geom.hpp"

namespace riccimap {

/// Channel order of the 9-plane image.
enum Channel : int {
    CH_R = 0,
    CH_G = 1,
    CH_B = 2,
    CH_NX = 3,
    CH_NY = 4,
    CH_NZ = 5,
    CH_K = 6,
    CH_CF = 7,
    CH_D = 8,
};

constexpr int NUM_CHANNELS = 9;

/// Planar multi-channel raster with a footprint mask and the per-channel
/// (min, max) ranges used for normalization. Out-of-mask samples are zero.
struct ChannelImage {
    int width = 0;
    int height = 0;
    std::vector<float> planes;        // NUM_CHANNELS * width * height, planar row-major
    std::vector<std::uint8_t> mask;   // width * height
    std::array<std::array<float, 2>, NUM_CHANNELS> norm{};  // (min, max) per channel

    float& at(int ch, int x, int y) { return planes[(ch * height + y) * width + x]; }
    float at(int ch, int x, int y) const { return planes[(ch * height + y) * width + x]; }
    bool in_mask(int x, int y) const { return mask[y * width + x] != 0; }
};

using VertexTuple = std::array<double, NUM_CHANNELS>;

/// Per-vertex channel tuples (R,G,B,Nx,Ny,Nz,K,CF,D). Depth is the vertex z
/// after centroid centering; missing colors become 128; absent conformal
/// factors become 1.
inline std::vector<VertexTuple> assemble_channels(const TriMesh& mesh, const PlanarEmbedding& emb,
                                                  const VertexVectors& normals,
                                                  const VertexScalars& curvature,
                                                  const VertexScalars* factors)
{
    const int nv = mesh.vertex_count();
    if (static_cast<int>(emb.uv.size()) != nv || static_cast<int>(normals.values.size()) != nv ||
        static_cast<int>(curvature.values.size()) != nv ||
        (factors && static_cast<int>(factors->values.size()) != nv))
        throw DimensionMismatchError("channel inputs indexed over different meshes");
    if (!factors && emb.source == EmbeddingSource::CONFORMAL)
        throw DimensionMismatchError("conformal embeddings require conformal factors");

    double zbar = mesh.centroid().z();
    std::vector<VertexTuple> table(nv);
    for (int v = 0; v < nv; ++v) {
        auto& t = table[v];
        if (mesh.has_colors()) {
            t[CH_R] = mesh.colors()[v][0];
            t[CH_G] = mesh.colors()[v][1];
            t[CH_B] = mesh.colors()[v][2];
        } else {
            t[CH_R] = t[CH_G] = t[CH_B] = 128.0;
        }
        t[CH_NX] = normals.values[v].x();
        t[CH_NY] = normals.values[v].y();
        t[CH_NZ] = normals.values[v].z();
        t[CH_K] = curvature.values[v];
        t[CH_CF] = factors ? factors->values[v] : 1.0;
        t[CH_D] = mesh.vertex(v).z() - zbar;
    }
    return table;
}

/// Barycentric rasterization of the embedding into width x height pixels with
/// a 2-pixel margin, followed by per-channel min-max normalization of in-mask
/// samples to [0, 255]. Constant channels normalize to 0. On pixels covered by
/// several faces the lowest face index wins.
inline ChannelImage rasterize(const std::vector<VertexTuple>& table, const PlanarEmbedding& emb,
                              const TriMesh& mesh, int width, int height)
{
    if (width < 2 || height < 2) throw DimensionMismatchError("raster size must be at least 2x2");
    if (table.size() != emb.uv.size() || static_cast<int>(table.size()) != mesh.vertex_count())
        throw DimensionMismatchError("tuple table does not match embedding");

    double ulo = std::numeric_limits<double>::infinity(), uhi = -ulo;
    double vlo = ulo, vhi = -ulo;
    for (const auto& p : emb.uv) {
        if (!p.allFinite()) throw DimensionMismatchError("non-finite embedding coordinate");
        ulo = std::min(ulo, p.x());
        uhi = std::max(uhi, p.x());
        vlo = std::min(vlo, p.y());
        vhi = std::max(vhi, p.y());
    }
    const double margin = 2.0;
    double su = (width - 2.0 * margin) / std::max(uhi - ulo, 1e-300);
    double sv = (height - 2.0 * margin) / std::max(vhi - vlo, 1e-300);
    double s = std::min(su, sv);
    double ucenter = 0.5 * (ulo + uhi), vcenter = 0.5 * (vlo + vhi);
    auto to_px = [&](const Vec2& p) {
        return Vec2(0.5 * width + s * (p.x() - ucenter), 0.5 * height + s * (p.y() - vcenter));
    };

    ChannelImage img;
    img.width = width;
    img.height = height;
    img.planes.assign(static_cast<std::size_t>(NUM_CHANNELS) * width * height, 0.0f);
    img.mask.assign(static_cast<std::size_t>(width) * height, 0);
    std::vector<int> owner(static_cast<std::size_t>(width) * height, -1);

    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& t = mesh.face(f);
        Vec2 a = to_px(emb.uv[t[0]]), b = to_px(emb.uv[t[1]]), c = to_px(emb.uv[t[2]]);
        double det = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
        if (det == 0.0) continue;
        int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}) - 0.5)));
        int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}) + 0.5)));
        int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}) - 0.5)));
        int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}) + 0.5)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                if (owner[y * width + x] >= 0) continue;
                Vec2 p(x + 0.5, y + 0.5);
                double w0 = ((b.x() - p.x()) * (c.y() - p.y()) - (b.y() - p.y()) * (c.x() - p.x())) / det;
                double w1 = ((c.x() - p.x()) * (a.y() - p.y()) - (c.y() - p.y()) * (a.x() - p.x())) / det;
                double w2 = 1.0 - w0 - w1;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                owner[y * width + x] = f;
                img.mask[y * width + x] = 1;
                for (int ch = 0; ch < NUM_CHANNELS; ++ch)
                    img.at(ch, x, y) = static_cast<float>(w0 * table[t[0]][ch] + w1 * table[t[1]][ch] +
                                                          w2 * table[t[2]][ch]);
            }
    }

    bool any = false;
    for (auto m : img.mask)
        if (m) {
            any = true;
            break;
        }
    if (!any) throw EmptyFootprintError("no pixel covered by the embedding");

    for (int ch = 0; ch < NUM_CHANNELS; ++ch) {
        float lo = std::numeric_limits<float>::infinity(), hi = -lo;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (img.in_mask(x, y)) {
                    lo = std::min(lo, img.at(ch, x, y));
                    hi = std::max(hi, img.at(ch, x, y));
                }
        img.norm[ch] = {lo, hi};
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                if (!img.in_mask(x, y)) {
                    img.at(ch, x, y) = 0.0f;
                    continue;
                }
                img.at(ch, x, y) = hi > lo ? (img.at(ch, x, y) - lo) / (hi - lo) * 255.0f : 0.0f;
            }
    }
    return img;
}

/// MCI: "MCI1" magic; u32 width, height, channels; u8 mask flag + 3 pad bytes;
/// float32 planes; mask bytes; float32 (min, max) pairs. Little-endian.
inline void write_mci(const ChannelImage& img, std::ostream& out)
{
    auto put_u32 = [&out](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    auto put_f32 = [&out](float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                              static_cast<unsigned char>(bits >> 16),
                              static_cast<unsigned char>(bits >> 24)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    out.write("MCI1", 4);
    put_u32(static_cast<std::uint32_t>(img.width));
    put_u32(static_cast<std::uint32_t>(img.height));
    put_u32(NUM_CHANNELS);
    unsigned char flags[4] = {1, 0, 0, 0};
    out.write(reinterpret_cast<char*>(flags), 4);
    for (float v : img.planes) put_f32(v);
    out.write(reinterpret_cast<const char*>(img.mask.data()), static_cast<std::streamsize>(img.mask.size()));
    for (const auto& mm : img.norm) {
        put_f32(mm[0]);
        put_f32(mm[1]);
    }
}

inline void write_mci(const ChannelImage& img, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    write_mci(img, out);
    if (!out) throw FormatError("short write to " + path);
}

inline ChannelImage read_mci(std::istream& in)
{
    auto get_u32 = [&in]() {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) throw FormatError("truncated MCI header");
        return static_cast<std::uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16)
               | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    auto get_f32 = [&in]() {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) throw FormatError("truncated MCI data");
        std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16)
                             | (static_cast<std::uint32_t>(b[3]) << 24);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    };
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "MCI1", 4) != 0) throw FormatError("bad MCI magic");
    ChannelImage img;
    img.width = static_cast<int>(get_u32());
    img.height = static_cast<int>(get_u32());
    std::uint32_t channels = get_u32();
    if (channels != NUM_CHANNELS) throw FormatError("MCI channel count must be 9");
    if (img.width < 2 || img.height < 2 || img.width > 1 << 20 || img.height > 1 << 20)
        throw FormatError("bad MCI dimensions");
    unsigned char flags[4];
    in.read(reinterpret_cast<char*>(flags), 4);
    if (!in) throw FormatError("truncated MCI header");
    const std::size_t npx = static_cast<std::size_t>(img.width) * img.height;
    img.planes.resize(NUM_CHANNELS * npx);
    for (auto& v : img.planes) v = get_f32();
    img.mask.assign(npx, 1);
    if (flags[0]) {
        in.read(reinterpret_cast<char*>(img.mask.data()), static_cast<std::streamsize>(npx));
        if (!in) throw FormatError("truncated MCI mask");
        for (auto m : img.mask)
            if (m > 1) throw FormatError("bad MCI mask byte");
    }
    for (auto& mm : img.norm) {
        mm[0] = get_f32();
        mm[1] = get_f32();
    }
    in.peek();
    if (!in.eof()) throw FormatError("trailing bytes after MCI payload");
    return img;
}

inline ChannelImage read_mci(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    return read_mci(in);
}

/// 8-bit P5 PGM of one normalized channel.
inline void export_channel_pgm(const ChannelImage& img, int channel, const std::string& path)
{
    if (channel < 0 || channel >= NUM_CHANNELS)
        throw IndexError("channel index " + std::to_string(channel) + " out of range");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            auto v = static_cast<unsigned char>(
                std::clamp(std::lround(img.at(channel, x, y)), 0l, 255l));
            out.put(static_cast<char>(v));
        }
}

}  // namespace riccimap

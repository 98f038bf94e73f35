#include "geometry/raster.h"

#include <algorithm>
#include <cmath>

#include "core/error.h"

namespace talkie::geo {

namespace {

inline double edge_fn(double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Half-open rule for texel centers exactly on an edge: with CCW winding the
// edge direction d decides ownership — left edges (dy > 0) and top edges
// (dy == 0, dx < 0) accept, the opposite directions reject. Antisymmetric
// under d -> -d, so an edge shared by two triangles is claimed exactly once.
inline bool on_edge_accepts(double dx, double dy) { return dy > 0.0 || (dy == 0.0 && dx < 0.0); }

}  // namespace

RasterField uv_rasterize(const MeshTopology& topo, const std::vector<float>& values, int channels,
                         int resolution) {
    require_usage(channels >= 1, "uv_rasterize: channels must be >= 1");
    require_usage(resolution >= 4, "uv_rasterize: resolution must be >= 4");
    require_usage(static_cast<int64_t>(values.size()) == topo.vertex_count * channels,
                  "uv_rasterize: values length does not match vertex_count");

    RasterField out;
    out.resolution = resolution;
    out.channels = channels;
    out.texels.assign(static_cast<size_t>(resolution) * resolution * channels, 0.0f);
    out.coverage.assign(static_cast<size_t>(resolution) * resolution, 0);

    const double res = static_cast<double>(resolution);
    for (const auto& face : topo.faces) {
        int32_t ia = face[0], ib = face[1], ic = face[2];
        double ax = topo.uv[ia][0] * res, ay = topo.uv[ia][1] * res;
        double bx = topo.uv[ib][0] * res, by = topo.uv[ib][1] * res;
        double cx = topo.uv[ic][0] * res, cy = topo.uv[ic][1] * res;

        double area2 = edge_fn(ax, ay, bx, by, cx, cy);
        if (area2 == 0.0) {
            out.degenerate_faces++;
            continue;
        }
        if (area2 < 0.0) {  // flip to CCW, keeping vertex identity
            std::swap(bx, cx);
            std::swap(by, cy);
            std::swap(ib, ic);
            area2 = -area2;
        }

        int x0 = std::max(0, static_cast<int>(std::floor(std::min({ax, bx, cx}) - 0.5)));
        int x1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({ax, bx, cx}))));
        int y0 = std::max(0, static_cast<int>(std::floor(std::min({ay, by, cy}) - 0.5)));
        int y1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({ay, by, cy}))));

        const float* va = values.data() + static_cast<int64_t>(ia) * channels;
        const float* vb = values.data() + static_cast<int64_t>(ib) * channels;
        const float* vc = values.data() + static_cast<int64_t>(ic) * channels;

        for (int y = y0; y <= y1; ++y) {
            const double py = y + 0.5;
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5;
                double e_ab = edge_fn(ax, ay, bx, by, px, py);  // weight for c
                double e_bc = edge_fn(bx, by, cx, cy, px, py);  // weight for a
                double e_ca = edge_fn(cx, cy, ax, ay, px, py);  // weight for b
                bool inside = (e_ab > 0.0 || (e_ab == 0.0 && on_edge_accepts(bx - ax, by - ay))) &&
                              (e_bc > 0.0 || (e_bc == 0.0 && on_edge_accepts(cx - bx, cy - by))) &&
                              (e_ca > 0.0 || (e_ca == 0.0 && on_edge_accepts(ax - cx, ay - cy)));
                if (!inside) continue;
                const int64_t ti = static_cast<int64_t>(y) * resolution + x;
                if (out.coverage[ti]) continue;  // first triangle in face order wins
                out.coverage[ti] = 1;
                const double wa = e_bc / area2, wb = e_ca / area2, wc = e_ab / area2;
                float* dst = out.texels.data() + ti * channels;
                for (int ch = 0; ch < channels; ++ch)
                    dst[ch] = static_cast<float>(wa * va[ch] + wb * vb[ch] + wc * vc[ch]);
            }
        }
    }
    return out;
}

MotionMap uv_rasterize_offsets(const MeshTopology& topo, const std::vector<float>& offsets,
                               int resolution) {
    return uv_rasterize(topo, offsets, 3, resolution);
}

SampleResult uv_sample(const MeshTopology& topo, const RasterField& map) {
    require_usage(map.resolution >= 4, "uv_sample: map resolution must be >= 4");
    const int res = map.resolution;
    const int ch = map.channels;

    SampleResult out;
    out.values.assign(static_cast<size_t>(topo.vertex_count) * ch, 0.0f);

    for (int64_t v = 0; v < topo.vertex_count; ++v) {
        const double x = topo.uv[v][0] * res - 0.5;
        const double y = topo.uv[v][1] * res - 0.5;
        const int x0 = static_cast<int>(std::floor(x));
        const int y0 = static_cast<int>(std::floor(y));
        const double fx = x - x0, fy = y - y0;
        const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
        const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
        const int ys[4] = {y0, y0, y0 + 1, y0 + 1};

        double acc[8] = {0};  // channels capped below
        require_usage(ch <= 8, "uv_sample: more than 8 channels unsupported");
        double wsum = 0.0;
        for (int k = 0; k < 4; ++k) {
            if (xs[k] < 0 || xs[k] >= res || ys[k] < 0 || ys[k] >= res) continue;
            if (!map.covered(ys[k], xs[k])) continue;
            const float* t = map.at(ys[k], xs[k]);
            for (int c = 0; c < ch; ++c) acc[c] += w[k] * t[c];
            wsum += w[k];
        }
        if (wsum <= 0.0) {
            out.uncovered_vertices++;
            continue;  // stays zero
        }
        float* dst = out.values.data() + v * ch;
        for (int c = 0; c < ch; ++c) dst[c] = static_cast<float>(acc[c] / wsum);
    }
    return out;
}

}  // namespace talkie::geo

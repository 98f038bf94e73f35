#pragma once

#include <cstdint>
#include <vector>

#include "geometry/mesh.h"

namespace talkie::geo {

// UV-space raster of a per-vertex field. Texels outside coverage are exactly
// zero; `degenerate_faces` counts zero-area UV triangles that were skipped.
struct RasterField {
    int resolution = 0;  // square H x W
    int channels = 0;
    std::vector<float> texels;     // res*res*channels, row-major, y = v axis
    std::vector<uint8_t> coverage;  // res*res
    int64_t degenerate_faces = 0;

    float* at(int y, int x) { return texels.data() + (static_cast<int64_t>(y) * resolution + x) * channels; }
    const float* at(int y, int x) const {
        return texels.data() + (static_cast<int64_t>(y) * resolution + x) * channels;
    }
    bool covered(int y, int x) const { return coverage[static_cast<int64_t>(y) * resolution + x] != 0; }
};

// 3-channel motion map in millimetres (the UV image of vertex offsets).
using MotionMap = RasterField;

struct SampleResult {
    std::vector<float> values;  // vertex_count * channels
    int64_t uncovered_vertices = 0;
};

// Rasterizes per-vertex values (vertex_count x channels) into UV space.
// Texel centers are tested against each UV triangle with a half-open
// (top/left in y-up) edge rule so shared edges are claimed exactly once;
// values are barycentric interpolations of the three corner values.
RasterField uv_rasterize(const MeshTopology& topo, const std::vector<float>& values, int channels,
                         int resolution);

// Convenience wrapper for 3-vector offsets.
MotionMap uv_rasterize_offsets(const MeshTopology& topo, const std::vector<float>& offsets,
                               int resolution);

// Coverage-weighted bilinear sample of `map` at each vertex UV. Vertices whose
// whole bilinear footprint is uncovered get zeros and are counted.
SampleResult uv_sample(const MeshTopology& topo, const RasterField& map);

}  // namespace talkie::geo

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace talkie::geo {

// Fixed face connectivity with a per-vertex UV chart and the vertex masks the
// motion metrics need. Invariants are checked by validate():
//   * face indices < vertex_count, uv inside [0,1]^2
//   * lip and upper-face masks disjoint
//   * at least one UV triangle has nonzero area
struct MeshTopology {
    int64_t vertex_count = 0;
    std::vector<std::array<int32_t, 3>> faces;
    std::vector<std::array<double, 2>> uv;  // per vertex
    std::vector<uint8_t> lip_mask;          // per vertex
    std::vector<uint8_t> upper_face_mask;   // per vertex

    void validate() const;

    std::vector<int64_t> lip_indices() const;
    std::vector<int64_t> upper_indices() const;
};

// Per-frame vertex offsets from the canonical (neutral) model, millimetres.
struct MotionSequence {
    int64_t frames = 0;
    int64_t vertices = 0;
    double fps = 0.0;
    std::vector<float> offsets;  // frames * vertices * 3

    const float* frame(int64_t t) const { return offsets.data() + t * vertices * 3; }
    float* frame(int64_t t) { return offsets.data() + t * vertices * 3; }
};

// Topology container format "TT4D-TOPO 1". Exact grammar in docs/formats.md.
void save_topology(const MeshTopology& topo, const std::string& path);
MeshTopology load_topology(const std::string& path);

}  // namespace talkie::geo

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace talkie::geo {

struct RigidTransform {
    std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major 3x3, det +1
    std::array<double, 3> translation{0, 0, 0};
    std::vector<float> aligned;  // rotation * source + translation, per vertex
};

// Least-squares rigid alignment of `source` onto `tmpl` (orthogonal
// Procrustes). Both are vertex_count x 3, row-major. Solved with the
// quaternion formulation, which always yields a proper rotation, so mirrored
// inputs cannot produce a reflection. Collinear or tiny point sets raise a
// degenerate-geometry error.
RigidTransform rigid_align(const std::vector<float>& source, const std::vector<float>& tmpl);

}  // namespace talkie::geo

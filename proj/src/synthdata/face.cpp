#include "synthdata/face.h"

#include <cmath>

#include "core/error.h"

namespace talkie::synthdata {

namespace {

constexpr int kNx = 22;
constexpr int kNy = 23;
constexpr double kMargin = 0.08;
constexpr double kLipU = 0.5, kLipV = 0.30;
constexpr double kEyeLu = 0.35, kEyeRu = 0.65, kEyeV = 0.68;

double bump(double d) { return d < 1.0 ? 0.5 * (1.0 + std::cos(M_PI * d)) : 0.0; }

}  // namespace

geo::MeshTopology make_face_topology() {
    geo::MeshTopology t;
    t.vertex_count = static_cast<int64_t>(kNx) * kNy;
    t.uv.resize(t.vertex_count);
    t.lip_mask.assign(t.vertex_count, 0);
    t.upper_face_mask.assign(t.vertex_count, 0);
    for (int j = 0; j < kNy; ++j)
        for (int i = 0; i < kNx; ++i) {
            const int64_t v = static_cast<int64_t>(j) * kNx + i;
            const double u = kMargin + (1.0 - 2 * kMargin) * i / (kNx - 1);
            const double w = kMargin + (1.0 - 2 * kMargin) * j / (kNy - 1);
            t.uv[v] = {u, w};
            const double lip_d = std::sqrt(std::pow((u - kLipU) / 0.17, 2.0) +
                                           std::pow((w - kLipV) / 0.11, 2.0));
            if (lip_d <= 1.0) t.lip_mask[v] = 1;
            if (w >= 0.60 && !t.lip_mask[v]) t.upper_face_mask[v] = 1;
        }
    for (int j = 0; j + 1 < kNy; ++j)
        for (int i = 0; i + 1 < kNx; ++i) {
            const int32_t v00 = j * kNx + i, v10 = j * kNx + i + 1;
            const int32_t v01 = (j + 1) * kNx + i, v11 = (j + 1) * kNx + i + 1;
            t.faces.push_back({v00, v10, v11});
            t.faces.push_back({v00, v11, v01});
        }
    t.validate();
    return t;
}

std::vector<float> face_rest_positions(const geo::MeshTopology& topo) {
    std::vector<float> out(topo.vertex_count * 3);
    for (int64_t v = 0; v < topo.vertex_count; ++v) {
        const double u = topo.uv[v][0], w = topo.uv[v][1];
        const double x = (u - 0.5) * 170.0;
        const double y = (w - 0.5) * 210.0;
        const double r2 = (u - 0.5) * (u - 0.5) * 4.0 + (w - 0.5) * (w - 0.5) * 2.8;
        const double z = 55.0 * std::max(0.0, 1.0 - r2);
        out[v * 3 + 0] = static_cast<float>(x);
        out[v * 3 + 1] = static_cast<float>(y);
        out[v * 3 + 2] = static_cast<float>(z);
    }
    return out;
}

std::vector<float> phoneme_basis(const geo::MeshTopology& topo, int k) {
    require_usage(k >= 0 && k < kNumPhonemes, "phoneme_basis: id out of range");
    const double theta = 2.0 * M_PI * k / kNumPhonemes;
    const double cu = kLipU + (0.05 + 0.02 * (k % 3)) * std::cos(theta);
    const double cv = kLipV + (0.035 + 0.012 * (k % 2)) * std::sin(theta);
    const double radius = 0.10 + 0.015 * (k % 2);
    const double amp = 2.2 + 0.8 * ((k * 37) % 5) / 4.0;  // millimetres
    // mouth-shape directions: mixture of open/close, spread and pucker
    double dir[3] = {0.45 * std::sin(theta), -0.85 - 0.1 * std::cos(theta),
                     0.5 + 0.15 * std::sin(2 * theta)};
    const double norm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    for (double& d : dir) d = d / norm * amp;

    std::vector<float> out(topo.vertex_count * 3, 0.0f);
    for (int64_t v = 0; v < topo.vertex_count; ++v) {
        const double du = (topo.uv[v][0] - cu) / radius;
        const double dv = (topo.uv[v][1] - cv) / radius;
        const double w = bump(std::sqrt(du * du + dv * dv));
        if (w == 0.0) continue;
        for (int c = 0; c < 3; ++c) out[v * 3 + c] = static_cast<float>(w * dir[c]);
    }
    return out;
}

std::vector<float> blink_field(const geo::MeshTopology& topo) {
    std::vector<float> out(topo.vertex_count * 3, 0.0f);
    const double radius = 0.085;
    for (int64_t v = 0; v < topo.vertex_count; ++v) {
        const double u = topo.uv[v][0], w = topo.uv[v][1];
        double acc = 0.0;
        for (double eu : {kEyeLu, kEyeRu}) {
            const double du = (u - eu) / radius, dv = (w - kEyeV) / radius;
            acc += bump(std::sqrt(du * du + dv * dv));
        }
        if (acc == 0.0) continue;
        out[v * 3 + 1] = static_cast<float>(-1.6 * acc);  // lid sweeps down
        out[v * 3 + 2] = static_cast<float>(-0.5 * acc);
    }
    return out;
}

}  // namespace talkie::synthdata

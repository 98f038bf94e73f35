#include "geometry/mesh.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/error.h"

namespace talkie::geo {

void MeshTopology::validate() const {
    require_usage(vertex_count > 0, "topology: vertex_count must be positive");
    require_usage(static_cast<int64_t>(uv.size()) == vertex_count, "topology: uv size mismatch");
    require_usage(static_cast<int64_t>(lip_mask.size()) == vertex_count, "topology: lip mask size mismatch");
    require_usage(static_cast<int64_t>(upper_face_mask.size()) == vertex_count,
                  "topology: upper-face mask size mismatch");
    for (const auto& f : faces)
        for (int32_t idx : f)
            require_usage(idx >= 0 && idx < vertex_count, "topology: face index out of range");
    for (const auto& p : uv)
        require_usage(p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0,
                      "topology: uv coordinate outside [0,1]^2");
    for (int64_t v = 0; v < vertex_count; ++v)
        require_usage(!(lip_mask[v] && upper_face_mask[v]),
                      "topology: lip and upper-face masks must be disjoint");
    bool any_area = false;
    for (const auto& f : faces) {
        const auto &a = uv[f[0]], &b = uv[f[1]], &c = uv[f[2]];
        double area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if (area2 != 0.0) {
            any_area = true;
            break;
        }
    }
    require_usage(any_area, "topology: every UV triangle is degenerate");
}

std::vector<int64_t> MeshTopology::lip_indices() const {
    std::vector<int64_t> out;
    for (int64_t v = 0; v < vertex_count; ++v)
        if (lip_mask[v]) out.push_back(v);
    return out;
}

std::vector<int64_t> MeshTopology::upper_indices() const {
    std::vector<int64_t> out;
    for (int64_t v = 0; v < vertex_count; ++v)
        if (upper_face_mask[v]) out.push_back(v);
    return out;
}

void save_topology(const MeshTopology& topo, const std::string& path) {
    topo.validate();
    std::filesystem::path p(path);
    if (!p.parent_path().empty()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail_data("cannot write topology: " + path);
    out << "TT4D-TOPO 1\n";
    out << "vertices " << topo.vertex_count << "\n";
    out << "faces " << topo.faces.size() << "\n";
    for (const auto& f : topo.faces) out << f[0] << " " << f[1] << " " << f[2] << "\n";
    out << "uv\n";
    out.precision(17);
    for (const auto& q : topo.uv) out << q[0] << " " << q[1] << "\n";
    auto lips = topo.lip_indices();
    out << "lip " << lips.size() << "\n";
    for (size_t i = 0; i < lips.size(); ++i) out << lips[i] << (i + 1 == lips.size() ? "\n" : " ");
    if (lips.empty()) out << "\n";
    auto uppers = topo.upper_indices();
    out << "upper " << uppers.size() << "\n";
    for (size_t i = 0; i < uppers.size(); ++i) out << uppers[i] << (i + 1 == uppers.size() ? "\n" : " ");
    if (uppers.empty()) out << "\n";
    if (!out) fail_data("short write to topology: " + path);
}

MeshTopology load_topology(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_data("cannot open topology: " + path);
    std::string word;
    int version = 0;
    in >> word >> version;
    if (word != "TT4D-TOPO" || version != 1) fail_data("not a TT4D-TOPO 1 file: " + path);

    MeshTopology t;
    int64_t n_faces = 0;
    auto expect = [&](const char* kw) {
        in >> word;
        if (!in || word != kw) fail_data(std::string("topology parse error, expected '") + kw + "' in " + path);
    };
    expect("vertices");
    in >> t.vertex_count;
    expect("faces");
    in >> n_faces;
    if (!in || t.vertex_count <= 0 || n_faces < 0) fail_data("topology parse error (counts): " + path);
    t.faces.resize(n_faces);
    for (auto& f : t.faces) in >> f[0] >> f[1] >> f[2];
    expect("uv");
    t.uv.resize(t.vertex_count);
    for (auto& q : t.uv) in >> q[0] >> q[1];
    t.lip_mask.assign(t.vertex_count, 0);
    t.upper_face_mask.assign(t.vertex_count, 0);
    int64_t k = 0;
    expect("lip");
    in >> k;
    for (int64_t i = 0; i < k; ++i) {
        int64_t idx;
        in >> idx;
        if (!in || idx < 0 || idx >= t.vertex_count) fail_data("topology parse error (lip indices): " + path);
        t.lip_mask[idx] = 1;
    }
    expect("upper");
    in >> k;
    for (int64_t i = 0; i < k; ++i) {
        int64_t idx;
        in >> idx;
        if (!in || idx < 0 || idx >= t.vertex_count) fail_data("topology parse error (upper indices): " + path);
        t.upper_face_mask[idx] = 1;
    }
    if (!in) fail_data("topology parse error: " + path);
    t.validate();
    return t;
}

}  // namespace talkie::geo

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace talkie {

// Named f32 array with a JSON sidecar. On disk a pair of files:
//   <base>.f32   raw little-endian float32, row-major
//   <base>.json  {"name": ..., "dtype": "f32", "shape": [...], ...extra}
// This is the exchange format for motion arrays, wrinkle arrays, textures,
// feature dumps and pivots.
struct NamedArray {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<float> data;
    nlohmann::json extra;  // additional sidecar fields, optional

    int64_t numel() const {
        int64_t n = 1;
        for (int64_t d : shape) n *= d;
        return n;
    }
    int64_t dim(size_t i) const { return shape.at(i); }

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }
};

NamedArray make_array(std::string name, std::vector<int64_t> shape, float fill = 0.0f);

// `base` is the path without extension; writes base.f32 and base.json.
void save_array(const NamedArray& a, const std::string& base);

// Accepts the base path, the .f32 path or the .json path.
NamedArray load_array(const std::string& path);

bool array_exists(const std::string& base);

}  // namespace talkie

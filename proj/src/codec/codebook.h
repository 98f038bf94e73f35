#pragma once

#include <cstdint>
#include <vector>

namespace talkie::codec {

// Discrete animation-primitive dictionary: C entries of dimension d.
struct Codebook {
    int size = 0;
    int dim = 0;
    std::vector<float> entries;  // size * dim

    const float* entry(int i) const { return entries.data() + static_cast<int64_t>(i) * dim; }

    // Nearest entry in L2; ties resolved to the lowest index.
    int nearest(const float* vec) const;

    void validate() const;
};

// h x w grid of d-dimensional latent vectors, stored cell-major ([h][w][d]).
struct LatentGrid {
    int h = 0, w = 0, d = 0;
    bool quantized = false;
    std::vector<float> values;    // h*w*d
    std::vector<int32_t> indices;  // h*w, present iff quantized

    int cells() const { return h * w; }
    const float* cell(int i) const { return values.data() + static_cast<int64_t>(i) * d; }
    float* cell(int i) { return values.data() + static_cast<int64_t>(i) * d; }
};

// Replaces every grid vector by its nearest codebook entry and records the
// index. Idempotent once quantized inputs are re-derived: quantizing an
// already-quantized grid is a contract error.
LatentGrid quantize(const LatentGrid& latent, const Codebook& book);

// Exhaustive nearest-neighbor indices for a batch of vectors (also the
// implementation behind quantize; tests compare against an independent scan).
std::vector<int32_t> nearest_indices(const Codebook& book, const std::vector<float>& vectors);

}  // namespace talkie::codec

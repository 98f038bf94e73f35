#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace talkie::style {

// Time-average of an identity's continuous (pre-quantization) latent
// sequence for one stream; the centroid that carries that identity's
// speaking or wrinkling style.
struct StylePivot {
    std::vector<float> vector;  // flattened h*w*d
    std::string stream;         // "motion" or "wrinkle"
    std::string identity;
    int64_t frame_count = 0;
    std::string codec_checkpoint_hash;
};

// latents: frames x dim, row-major. Arithmetic mean over time.
StylePivot compute_pivot(const std::vector<float>& latents, int64_t frames, int64_t dim);

// offsets[t] = latents[t] - pivot (and the exact inverse).
std::vector<float> to_offsets(const std::vector<float>& latents, const StylePivot& pivot);
std::vector<float> from_offsets(const std::vector<float>& offsets, const StylePivot& pivot);

// Pivot file: f32 named-array plus sidecar metadata.
void save_pivot(const StylePivot& pivot, const std::string& base);
StylePivot load_pivot(const std::string& path);

}  // namespace talkie::style

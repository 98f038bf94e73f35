#pragma once

#include <string>
#include <vector>

#include "codec/trainer.h"
#include "diffusion/ldm.h"
#include "geometry/raster.h"
#include "style/pivot.h"

namespace talkie::diffusion {

struct SamplerConfig {
    std::string mode = "ddpm";  // "ddpm" (ancestral) or "ddim" (deterministic strided)
    int ddim_steps = 25;
    uint64_t seed = 1;
};

struct GeneratedSequence {
    int64_t frames = 0;
    // latent offsets as emitted by the sampler (frames x token_dim)
    std::vector<float> offsets;
    // decoded motion maps and wrinkle maps, frames x H x W x 3 (HWC)
    std::vector<std::vector<float>> motion_maps;
    std::vector<std::vector<float>> wrinkle_maps;
    // per-vertex offsets from uv_sample, frames x n_v x 3 (millimetres)
    geo::MotionSequence motion;
    int resolution = 0;
};

// Denoises latent offsets window by window: ceil((T - T_w)/T_w) + 1 windows,
// each conditioned on the final T_p emitted frames of the previous window
// (learnable start features for the first). Emitted frames are frozen; the
// re-predicted context is used only inside the denoiser. Deterministic per
// seed.
std::vector<float> sample_offsets(const Denoiser& model, const NoiseSchedule& schedule,
                                  const std::vector<float>& audio_aligned, int64_t frames,
                                  const SamplerConfig& cfg);

// Full pipeline: sampled offsets + pivots -> quantize -> decode -> maps ->
// vertex offsets. Pivot dimensions must match the codec latent sizes.
GeneratedSequence sample_sequence(const Denoiser& model, const NoiseSchedule& schedule,
                                  const std::vector<float>& audio_aligned, int64_t frames,
                                  const style::StylePivot& motion_pivot,
                                  const style::StylePivot& wrinkle_pivot,
                                  const codec::CodecModel& motion_codec, double motion_scale,
                                  const codec::CodecModel& wrinkle_codec,
                                  const geo::MeshTopology& topology, double fps,
                                  const SamplerConfig& cfg);

// Number of windows the sampler consumes for a sequence of length `frames`.
int64_t window_count(int64_t frames, int t_win);

}  // namespace talkie::diffusion

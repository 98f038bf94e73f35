#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/log.h"
#include "diffusion/denoiser.h"
#include "diffusion/schedule.h"

namespace talkie::diffusion {

// One training sequence in latent-offset space: frames x token_dim where each
// row is the concatenation of the flattened motion and wrinkle latent offsets.
struct LatentSequence {
    std::string identity;
    int64_t frames = 0;
    int token_dim = 0;
    std::vector<float> offsets;  // frames * token_dim

    const float* frame(int64_t t) const { return offsets.data() + t * token_dim; }
};

// A window drawn for training. x_prev empty means "first window": the
// denoiser substitutes its learnable start features and the loss covers only
// the current frames (there is no ground truth before the sequence).
struct WindowSample {
    std::vector<float> x_cur;   // t_cur * token_dim, clean
    std::vector<float> x_prev;  // t_prev * token_dim or empty
    std::vector<float> audio;   // (t_prev + t_cur) * audio_dim
    int t_cur = 0;
};

// Injectable denoise call so losses can be exercised with stubs: arguments
// mirror Denoiser::forward and the result must be a (t_prev+t_cur) x
// token_dim node on the tape.
using DenoiseFn = std::function<int(nn::Tape&, const float* x_cur, int t_cur, const float* x_prev,
                                    const float* audio, int64_t n)>;

// Diffusion training loss for one window: draws nothing itself -- the caller
// supplies the step n and noise. Noise is applied to the current window only;
// the mean squared error covers context plus current frames (current only for
// first windows).
int build_window_loss(nn::Tape& t, const WindowSample& w, int64_t n,
                      const std::vector<float>& noise, const NoiseSchedule& schedule,
                      int t_prev, const DenoiseFn& denoise);

// Batch loss with per-sample uniform step draw n ~ U[1, N]; returns the mean
// loss value (used by tests and the trainer).
double ldm_loss(const std::vector<WindowSample>& batch, const NoiseSchedule& schedule, int t_prev,
                const DenoiseFn& denoise, talkie::Rng& rng);

struct LdmTrainConfig {
    int64_t steps = 12000;
    int batch = 8;
    double lr = 3e-4;
    double grad_clip = 1.0;
    uint64_t seed = 1;
    int threads = 2;
    int min_window = 4;  // random truncation lower bound
    int64_t log_every = 100;

    void validate() const;
};

struct LdmTrainStats {
    double first_loss = 0, last_loss = 0, smoothed_loss = 0;
    int64_t steps_run = 0;
};

// Audio rows for a window [start - t_prev, start + t_cur), clamped at the
// sequence head (the first frames repeat row 0).
std::vector<float> window_audio(const std::vector<float>& audio_frames, int64_t total_frames,
                                int audio_dim, int64_t start, int t_prev, int t_cur);

LdmTrainStats train_ldm(Denoiser& model, const NoiseSchedule& schedule,
                        const std::vector<LatentSequence>& sequences,
                        const std::vector<std::vector<float>>& audio_aligned,  // per sequence
                        const LdmTrainConfig& cfg, Log* log);

// Checkpoint embeds schedule parameters, window sizes, token dimension and
// the content hashes of both codec checkpoints; generation refuses mismatches.
struct LdmCheckpointMeta {
    std::string motion_codec_hash;
    std::string wrinkle_codec_hash;
    double fps = 0.0;
    int motion_latent_dim = 0;   // flattened per-frame motion latent size
    int wrinkle_latent_dim = 0;  // flattened per-frame wrinkle latent size
};

void save_ldm_checkpoint(const std::string& path, const Denoiser& model,
                         const NoiseSchedule& schedule, const LdmCheckpointMeta& meta,
                         int64_t step, const std::string& config_hash);

struct LoadedLdm {
    Denoiser model;
    NoiseSchedule schedule;
    LdmCheckpointMeta meta;
    int64_t step = 0;
    std::string config_hash;
};
LoadedLdm load_ldm_checkpoint(const std::string& path);

}  // namespace talkie::diffusion

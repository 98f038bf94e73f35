#pragma once

#include <vector>

#include "nn/layers.h"

namespace talkie::diffusion {

// Transformer decoder that jointly predicts clean motion-wrinkle samples for
// the previous-context and current frames of one window, conditioned on
// per-frame audio features and the diffusion step.
struct DenoiserConfig {
    int token_dim = 0;   // flattened motion+wrinkle latent offsets per frame
    int audio_dim = 80;
    int model_dim = 128;
    int layers = 2;
    int heads = 4;
    int ffn_mult = 4;
    int t_win = 16;   // current window length
    int t_prev = 4;   // previous-context length

    void validate() const;
};

struct DenoiserLayer {
    nn::LayerNormLayer ln_self, ln_cross, ln_ffn;
    nn::LinearLayer q_self, k_self, v_self, o_self;
    nn::LinearLayer q_cross, k_cross, v_cross, o_cross;
    nn::LinearLayer ffn_in, ffn_out;

    DenoiserLayer() = default;
    DenoiserLayer(const std::string& name, int dim, int ffn_mult, talkie::Rng& rng);
    void collect(nn::ParamSet& ps);
};

// Cross-attention mask over [1 + T_p + T_cur] query tokens and [T_p + T_cur]
// audio tokens: each frame token may only see the audio token of its own
// frame (0 on the diagonal, -inf elsewhere); the leading timestep token sees
// nothing and contributes a zero cross-attention output.
std::vector<float> build_alignment_mask(int t_prev, int t_cur);

struct Denoiser {
    DenoiserConfig cfg;
    nn::LinearLayer frame_embed;   // token_dim -> model_dim
    nn::LinearLayer audio_embed;   // audio_dim -> model_dim
    nn::LinearLayer time_embed_in, time_embed_out;
    nn::Param start_features;      // [t_prev, token_dim], replaces missing context
    nn::Param pos_embed;           // [1 + t_prev + t_win, model_dim]
    nn::Param seg_embed;           // [2, model_dim]: 0 = context, 1 = current
    std::vector<DenoiserLayer> blocks;
    nn::LayerNormLayer final_norm;
    nn::LinearLayer out_proj;      // model_dim -> token_dim

    Denoiser() = default;
    Denoiser(const DenoiserConfig& cfg, talkie::Rng& rng);

    // x_cur: t_cur x token_dim (noisy); x_prev: t_prev x token_dim clean
    // context or nullptr for the first window (learnable start features);
    // audio: (t_prev + t_cur) x audio_dim, already frame-aligned.
    // Returns the node holding predictions for all t_prev + t_cur frames.
    int forward(nn::Tape& t, const float* x_cur, int t_cur, const float* x_prev,
                const float* audio, int64_t n) const;

    void collect(nn::ParamSet& ps);
};

}  // namespace talkie::diffusion

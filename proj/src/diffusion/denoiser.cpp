#include "diffusion/denoiser.h"

#include <cmath>
#include <limits>

#include "core/error.h"

namespace talkie::diffusion {

using namespace talkie::nn;

void DenoiserConfig::validate() const {
    require_usage(token_dim >= 1 && audio_dim >= 1, "denoiser: bad token/audio dims");
    require_usage(model_dim % heads == 0, "denoiser: model dim must divide by head count");
    require_usage(t_win >= 1 && t_prev >= 1, "denoiser: window sizes must be positive");
}

DenoiserLayer::DenoiserLayer(const std::string& name, int dim, int ffn_mult, talkie::Rng& rng)
    : ln_self(name + ".ln_self", dim),
      ln_cross(name + ".ln_cross", dim),
      ln_ffn(name + ".ln_ffn", dim),
      q_self(name + ".q_self", dim, dim, rng),
      k_self(name + ".k_self", dim, dim, rng),
      v_self(name + ".v_self", dim, dim, rng),
      o_self(name + ".o_self", dim, dim, rng, 0.5),
      q_cross(name + ".q_cross", dim, dim, rng),
      k_cross(name + ".k_cross", dim, dim, rng),
      v_cross(name + ".v_cross", dim, dim, rng),
      o_cross(name + ".o_cross", dim, dim, rng, 0.5),
      ffn_in(name + ".ffn_in", dim, dim * ffn_mult, rng),
      ffn_out(name + ".ffn_out", dim * ffn_mult, dim, rng, 0.5) {}

void DenoiserLayer::collect(ParamSet& ps) {
    ln_self.collect(ps);
    ln_cross.collect(ps);
    ln_ffn.collect(ps);
    q_self.collect(ps);
    k_self.collect(ps);
    v_self.collect(ps);
    o_self.collect(ps);
    q_cross.collect(ps);
    k_cross.collect(ps);
    v_cross.collect(ps);
    o_cross.collect(ps);
    ffn_in.collect(ps);
    ffn_out.collect(ps);
}

std::vector<float> build_alignment_mask(int t_prev, int t_cur) {
    const int frames = t_prev + t_cur;
    const int rows = 1 + frames;
    const float ninf = -std::numeric_limits<float>::infinity();
    std::vector<float> mask(static_cast<size_t>(rows) * frames, ninf);
    for (int i = 0; i < frames; ++i) mask[static_cast<size_t>(1 + i) * frames + i] = 0.0f;
    return mask;
}

Denoiser::Denoiser(const DenoiserConfig& cfg_, talkie::Rng& rng) : cfg(cfg_) {
    cfg.validate();
    frame_embed = LinearLayer("den.frame_embed", cfg.token_dim, cfg.model_dim, rng);
    audio_embed = LinearLayer("den.audio_embed", cfg.audio_dim, cfg.model_dim, rng);
    time_embed_in = LinearLayer("den.time_in", cfg.model_dim, cfg.model_dim, rng);
    time_embed_out = LinearLayer("den.time_out", cfg.model_dim, cfg.model_dim, rng);
    start_features = make_param_normal("den.start", {cfg.t_prev, cfg.token_dim}, rng, 0.02);
    pos_embed =
        make_param_normal("den.pos", {1 + cfg.t_prev + cfg.t_win, cfg.model_dim}, rng, 0.02);
    seg_embed = make_param_normal("den.seg", {2, cfg.model_dim}, rng, 0.02);
    for (int l = 0; l < cfg.layers; ++l)
        blocks.emplace_back("den.block" + std::to_string(l), cfg.model_dim, cfg.ffn_mult, rng);
    final_norm = LayerNormLayer("den.final_norm", cfg.model_dim);
    out_proj = LinearLayer("den.out", cfg.model_dim, cfg.token_dim, rng, 0.5);
}

void Denoiser::collect(ParamSet& ps) {
    frame_embed.collect(ps);
    audio_embed.collect(ps);
    time_embed_in.collect(ps);
    time_embed_out.collect(ps);
    ps.add(start_features);
    ps.add(pos_embed);
    ps.add(seg_embed);
    for (auto& b : blocks) b.collect(ps);
    final_norm.collect(ps);
    out_proj.collect(ps);
}

int Denoiser::forward(Tape& t, const float* x_cur, int t_cur, const float* x_prev,
                      const float* audio, int64_t n) const {
    require_usage(t_cur >= 1 && t_cur <= cfg.t_win, "denoiser: bad current window length");
    const int frames = cfg.t_prev + t_cur;
    const int D = cfg.model_dim;

    // timestep token from a sinusoidal embedding
    std::vector<float> sincos(static_cast<size_t>(D));
    for (int i = 0; i < D / 2; ++i) {
        const double freq = std::exp(-std::log(10000.0) * (2.0 * i / D));
        sincos[i] = static_cast<float>(std::sin(n * freq));
        sincos[D / 2 + i] = static_cast<float>(std::cos(n * freq));
    }
    int time_tok = constant(t, {1, D}, sincos.data());
    time_tok = time_embed_out(t, silu(t, time_embed_in(t, time_tok)));

    // frame tokens: embedded raw samples plus segment embedding
    const int prev_raw = x_prev != nullptr
                             ? constant(t, {cfg.t_prev, cfg.token_dim}, x_prev)
                             : t.leaf(const_cast<Param&>(start_features));
    const int cur_raw = constant(t, {t_cur, cfg.token_dim}, x_cur);
    int prev_tok = frame_embed(t, prev_raw);
    int cur_tok = frame_embed(t, cur_raw);
    {
        std::vector<int> seg_prev(static_cast<size_t>(cfg.t_prev), 0);
        std::vector<int> seg_cur(static_cast<size_t>(t_cur), 1);
        prev_tok = add(t, prev_tok, gather_rows(t, t.leaf(const_cast<Param&>(seg_embed)), seg_prev));
        cur_tok = add(t, cur_tok, gather_rows(t, t.leaf(const_cast<Param&>(seg_embed)), seg_cur));
    }

    int x = concat_rows(t, {time_tok, prev_tok, cur_tok});
    x = add(t, x, slice_rows(t, t.leaf(const_cast<Param&>(pos_embed)), 0, 1 + frames));

    const int audio_in = constant(t, {frames, cfg.audio_dim}, audio);
    const int audio_tok = audio_embed(t, audio_in);
    const std::vector<float> mask = build_alignment_mask(cfg.t_prev, t_cur);

    for (const auto& blk : blocks) {
        {
            const int h = blk.ln_self(t, x);
            const int att = multihead_attention(t, blk.q_self(t, h), blk.k_self(t, h),
                                                blk.v_self(t, h), cfg.heads);
            x = add(t, x, blk.o_self(t, att));
        }
        {
            const int h = blk.ln_cross(t, x);
            const int att = multihead_attention(t, blk.q_cross(t, h), blk.k_cross(t, audio_tok),
                                                blk.v_cross(t, audio_tok), cfg.heads, &mask);
            x = add(t, x, blk.o_cross(t, att));
        }
        {
            const int h = blk.ln_ffn(t, x);
            x = add(t, x, blk.ffn_out(t, gelu(t, blk.ffn_in(t, h))));
        }
    }
    const int y = out_proj(t, final_norm(t, x));
    return slice_rows(t, y, 1, frames);  // drop the timestep token
}

}  // namespace talkie::diffusion

#include "diffusion/sampler.h"

#include <algorithm>
#include <cmath>

#include "core/error.h"
#include "core/rng.h"

namespace talkie::diffusion {

int64_t window_count(int64_t frames, int t_win) {
    if (frames <= t_win) return 1;
    return (frames - t_win + t_win - 1) / t_win + 1;  // ceil((T - T_w)/T_w) + 1
}

namespace {

std::vector<float> denoise_values(const Denoiser& model, const float* x_cur, int t_cur,
                                  const float* x_prev, const float* audio, int64_t n,
                                  int token_dim) {
    nn::Tape t;
    const int pred = model.forward(t, x_cur, t_cur, x_prev, audio, n);
    // emitted frames come from the current rows only
    const float* v = t[pred].v + static_cast<int64_t>(model.cfg.t_prev) * token_dim;
    return std::vector<float>(v, v + static_cast<int64_t>(t_cur) * token_dim);
}

// One window of iterative denoising from pure noise.
std::vector<float> run_window(const Denoiser& model, const NoiseSchedule& sch, const float* x_prev,
                              const std::vector<float>& audio, int t_cur, const SamplerConfig& cfg,
                              talkie::Rng& rng) {
    const int D = model.cfg.token_dim;
    const int64_t n_el = static_cast<int64_t>(t_cur) * D;
    std::vector<float> x(n_el);
    for (auto& v : x) v = static_cast<float>(rng.gaussian());

    if (cfg.mode == "ddim") {
        // deterministic strided sampler on the clean-sample parameterization
        const int64_t hops = std::max<int64_t>(1, std::min<int64_t>(cfg.ddim_steps, sch.steps));
        std::vector<int64_t> ns;
        for (int64_t i = 0; i < hops; ++i)
            ns.push_back(sch.steps - i * sch.steps / hops);  // descending, ends > 0
        for (size_t k = 0; k < ns.size(); ++k) {
            const int64_t n = ns[k];
            const int64_t n_prev = (k + 1 < ns.size()) ? ns[k + 1] : 0;
            const std::vector<float> x0 =
                denoise_values(model, x.data(), t_cur, x_prev, audio.data(), n, D);
            const double ab_n = sch.alpha_bar(n), ab_p = sch.alpha_bar(n_prev);
            const double c0 = std::sqrt(ab_p);
            const double ce = std::sqrt(1.0 - ab_p) / std::sqrt(1.0 - ab_n);
            for (int64_t i = 0; i < n_el; ++i) {
                const double eps_hat = (x[i] - std::sqrt(ab_n) * x0[i]);
                x[i] = static_cast<float>(c0 * x0[i] + ce * eps_hat);
            }
        }
        return x;
    }

    require_usage(cfg.mode == "ddpm", "sampler: unknown mode " + cfg.mode);
    for (int64_t n = sch.steps; n >= 1; --n) {
        const std::vector<float> x0 =
            denoise_values(model, x.data(), t_cur, x_prev, audio.data(), n, D);
        if (n == 1) {
            x = x0;
            break;
        }
        const double ab_n = sch.alpha_bar(n), ab_p = sch.alpha_bar(n - 1);
        const double alpha_n = ab_n / ab_p;
        const double beta_n = 1.0 - alpha_n;
        const double c_x0 = std::sqrt(ab_p) * beta_n / (1.0 - ab_n);
        const double c_xn = std::sqrt(alpha_n) * (1.0 - ab_p) / (1.0 - ab_n);
        const double var = beta_n * (1.0 - ab_p) / (1.0 - ab_n);
        const double sd = std::sqrt(std::max(0.0, var));
        for (int64_t i = 0; i < n_el; ++i)
            x[i] = static_cast<float>(c_x0 * x0[i] + c_xn * x[i] + sd * rng.gaussian());
    }
    return x;
}

}  // namespace

std::vector<float> sample_offsets(const Denoiser& model, const NoiseSchedule& schedule,
                                  const std::vector<float>& audio_aligned, int64_t frames,
                                  const SamplerConfig& cfg) {
    require_usage(frames >= 1, "sample_offsets: need at least one frame");
    const int D = model.cfg.token_dim;
    const int d_a = model.cfg.audio_dim;
    require_usage(static_cast<int64_t>(audio_aligned.size()) == frames * d_a,
                  "sample_offsets: audio not aligned to frame count");

    talkie::Rng rng = talkie::Rng(cfg.seed).fork("sampler");
    std::vector<float> out(static_cast<size_t>(frames) * D);
    int64_t emitted = 0;
    while (emitted < frames) {
        const int t_cur = static_cast<int>(std::min<int64_t>(model.cfg.t_win, frames - emitted));
        const std::vector<float> audio = window_audio(audio_aligned, frames, d_a, emitted,
                                                      model.cfg.t_prev, t_cur);
        const float* x_prev =
            emitted == 0 ? nullptr : out.data() + (emitted - model.cfg.t_prev) * D;
        // first window must still have t_prev frames behind it afterwards
        const std::vector<float> x =
            run_window(model, schedule, x_prev, audio, t_cur, cfg, rng);
        std::copy(x.begin(), x.end(), out.begin() + emitted * D);
        emitted += t_cur;
    }
    return out;
}

GeneratedSequence sample_sequence(const Denoiser& model, const NoiseSchedule& schedule,
                                  const std::vector<float>& audio_aligned, int64_t frames,
                                  const style::StylePivot& motion_pivot,
                                  const style::StylePivot& wrinkle_pivot,
                                  const codec::CodecModel& motion_codec, double motion_scale,
                                  const codec::CodecModel& wrinkle_codec,
                                  const geo::MeshTopology& topology, double fps,
                                  const SamplerConfig& cfg) {
    const int side_m = motion_codec.cfg.latent_side();
    const int side_w = wrinkle_codec.cfg.latent_side();
    const int dim_m = side_m * side_m * motion_codec.cfg.latent_dim;
    const int dim_w = side_w * side_w * wrinkle_codec.cfg.latent_dim;
    require_usage(static_cast<int>(motion_pivot.vector.size()) == dim_m,
                  "sample_sequence: motion pivot does not match the motion codec latent size");
    require_usage(static_cast<int>(wrinkle_pivot.vector.size()) == dim_w,
                  "sample_sequence: wrinkle pivot does not match the wrinkle codec latent size");
    require_usage(model.cfg.token_dim == dim_m + dim_w,
                  "sample_sequence: denoiser token dim does not match codec latents");

    GeneratedSequence out;
    out.frames = frames;
    out.offsets = sample_offsets(model, schedule, audio_aligned, frames, cfg);
    out.resolution = motion_codec.cfg.resolution;

    const codec::Codebook book_m = motion_codec.codebook_view();
    const codec::Codebook book_w = wrinkle_codec.codebook_view();

    // canonical coverage for the inverse UV mapping
    const geo::RasterField cover = geo::uv_rasterize_offsets(
        topology, std::vector<float>(topology.vertex_count * 3, 0.0f), out.resolution);

    out.motion.frames = frames;
    out.motion.vertices = topology.vertex_count;
    out.motion.fps = fps;
    out.motion.offsets.assign(static_cast<size_t>(frames) * topology.vertex_count * 3, 0.0f);

    for (int64_t f = 0; f < frames; ++f) {
        const float* row = out.offsets.data() + f * model.cfg.token_dim;
        codec::LatentGrid zm;
        zm.h = zm.w = side_m;
        zm.d = motion_codec.cfg.latent_dim;
        zm.values.resize(dim_m);
        for (int i = 0; i < dim_m; ++i) zm.values[i] = row[i] + motion_pivot.vector[i];
        codec::LatentGrid zw;
        zw.h = zw.w = side_w;
        zw.d = wrinkle_codec.cfg.latent_dim;
        zw.values.resize(dim_w);
        for (int i = 0; i < dim_w; ++i) zw.values[i] = row[dim_m + i] + wrinkle_pivot.vector[i];

        const std::vector<float> dec_m =
            codec::codec_decode(motion_codec, codec::quantize(zm, book_m));
        const std::vector<float> dec_w =
            codec::codec_decode(wrinkle_codec, codec::quantize(zw, book_w));

        const int R = out.resolution;
        std::vector<float> map_m =
            codec::chw_to_hwc(dec_m, motion_codec.cfg.in_channels, R, R);
        for (auto& v : map_m) v = static_cast<float>(v * motion_scale);  // back to millimetres
        std::vector<float> map_w =
            codec::chw_to_hwc(dec_w, wrinkle_codec.cfg.in_channels, R, R);
        for (auto& v : map_w)
            v = std::clamp((v + 1.0f) * 0.5f, 1e-4f, 1.0f - 1e-4f);  // back to (0,1)

        geo::RasterField field;
        field.resolution = R;
        field.channels = 3;
        field.texels = map_m;
        field.coverage = cover.coverage;
        const geo::SampleResult verts = geo::uv_sample(topology, field);
        std::copy(verts.values.begin(), verts.values.end(), out.motion.frame(f));

        out.motion_maps.push_back(std::move(map_m));
        out.wrinkle_maps.push_back(std::move(map_w));
    }
    return out;
}

}  // namespace talkie::diffusion

#include "diffusion/ldm.h"

#include <cmath>
#include <memory>

#include "core/archive.h"
#include "core/error.h"
#include "core/parallel.h"
#include "nn/adam.h"

namespace talkie::diffusion {

using namespace talkie::nn;

void LdmTrainConfig::validate() const {
    require_usage(steps >= 1 && batch >= 1, "ldm train: steps and batch must be positive");
    require_usage(min_window >= 1, "ldm train: min_window must be >= 1");
}

int build_window_loss(Tape& t, const WindowSample& w, int64_t n, const std::vector<float>& noise,
                      const NoiseSchedule& schedule, int t_prev, const DenoiseFn& denoise) {
    require_usage(w.t_cur >= 1, "window loss: empty current window");
    require_usage(noise.size() == w.x_cur.size(), "window loss: noise shape mismatch");
    const bool first_window = w.x_prev.empty();
    const int token_dim = static_cast<int>(w.x_cur.size()) / w.t_cur;

    const std::vector<float> x_noisy = q_sample(w.x_cur, n, noise, schedule);
    const int pred = denoise(t, x_noisy.data(), w.t_cur, first_window ? nullptr : w.x_prev.data(),
                             w.audio.data(), n);
    require_usage(t[pred].shape == Shape{t_prev + w.t_cur, token_dim},
                  "window loss: denoiser output shape mismatch");

    if (first_window) {
        const int pred_cur = slice_rows(t, pred, t_prev, w.t_cur);
        const int target = constant(t, {w.t_cur, token_dim}, w.x_cur.data());
        return mse(t, pred_cur, target);
    }
    std::vector<float> full(w.x_prev.size() + w.x_cur.size());
    std::copy(w.x_prev.begin(), w.x_prev.end(), full.begin());
    std::copy(w.x_cur.begin(), w.x_cur.end(), full.begin() + w.x_prev.size());
    const int target = constant(t, {t_prev + w.t_cur, token_dim}, full.data());
    return mse(t, pred, target);
}

double ldm_loss(const std::vector<WindowSample>& batch, const NoiseSchedule& schedule, int t_prev,
                const DenoiseFn& denoise, talkie::Rng& rng) {
    require_usage(!batch.empty(), "ldm_loss: empty batch");
    double acc = 0.0;
    for (const auto& w : batch) {
        const int64_t n = 1 + rng.uniform_int(schedule.steps);
        std::vector<float> noise(w.x_cur.size());
        for (auto& v : noise) v = static_cast<float>(rng.gaussian());
        Tape t;
        const int loss = build_window_loss(t, w, n, noise, schedule, t_prev, denoise);
        acc += t[loss].v[0];
    }
    return acc / static_cast<double>(batch.size());
}

std::vector<float> window_audio(const std::vector<float>& audio_frames, int64_t total_frames,
                                int audio_dim, int64_t start, int t_prev, int t_cur) {
    std::vector<float> out(static_cast<size_t>(t_prev + t_cur) * audio_dim);
    for (int i = 0; i < t_prev + t_cur; ++i) {
        int64_t src = start - t_prev + i;
        if (src < 0) src = 0;  // clamp at the sequence head
        require_usage(src < total_frames, "window_audio: window exceeds sequence");
        std::copy(audio_frames.begin() + src * audio_dim,
                  audio_frames.begin() + (src + 1) * audio_dim, out.begin() + static_cast<int64_t>(i) * audio_dim);
    }
    return out;
}

namespace {

WindowSample draw_window(const LatentSequence& seq, const std::vector<float>& audio, int audio_dim,
                         int t_win, int t_prev, int min_window, talkie::Rng& rng) {
    WindowSample w;
    // valid starts: 0 (start features) or at least t_prev frames in
    std::vector<int64_t> starts;
    starts.push_back(0);
    for (int64_t s = t_prev; s + min_window <= seq.frames; ++s) starts.push_back(s);
    const int64_t start = starts[rng.uniform_int(static_cast<int64_t>(starts.size()))];

    int64_t max_len = std::min<int64_t>(t_win, seq.frames - start);
    if (max_len < min_window) max_len = min_window;  // short sequences
    // random truncation for robustness to the variable last window
    const int64_t t_cur = min_window + rng.uniform_int(max_len - min_window + 1);

    w.t_cur = static_cast<int>(t_cur);
    w.x_cur.assign(seq.frame(start), seq.frame(start) + t_cur * seq.token_dim);
    if (start > 0)
        w.x_prev.assign(seq.frame(start - t_prev), seq.frame(start - t_prev) + t_prev * seq.token_dim);
    w.audio = window_audio(audio, seq.frames, audio_dim, start, t_prev, w.t_cur);
    return w;
}

}  // namespace

LdmTrainStats train_ldm(Denoiser& model, const NoiseSchedule& schedule,
                        const std::vector<LatentSequence>& sequences,
                        const std::vector<std::vector<float>>& audio_aligned,
                        const LdmTrainConfig& cfg, Log* log) {
    cfg.validate();
    require_usage(!sequences.empty() && sequences.size() == audio_aligned.size(),
                  "train_ldm: sequences/audio mismatch");
    for (size_t i = 0; i < sequences.size(); ++i) {
        require_usage(sequences[i].token_dim == model.cfg.token_dim,
                      "train_ldm: token dim mismatch");
        require_usage(static_cast<int64_t>(audio_aligned[i].size()) ==
                          sequences[i].frames * model.cfg.audio_dim,
                      "train_ldm: audio not aligned to frames");
        require_usage(sequences[i].frames >= cfg.min_window, "train_ldm: sequence too short");
    }

    ParamSet params;
    model.collect(params);
    Adam opt({.lr = cfg.lr});
    Rng rng = Rng(cfg.seed).fork("ldm_train");

    // sequence draw weighted by frame count
    std::vector<int64_t> cum;
    int64_t total = 0;
    for (const auto& s : sequences) {
        total += s.frames;
        cum.push_back(total);
    }

    LdmTrainStats stats;
    double smoothed = -1.0;
    const int B = cfg.batch;
    for (int64_t step = 0; step < cfg.steps; ++step) {
        std::vector<WindowSample> batch(B);
        std::vector<int64_t> ns(B);
        std::vector<std::vector<float>> noises(B);
        for (int i = 0; i < B; ++i) {
            const int64_t pick = rng.uniform_int(total);
            size_t si = 0;
            while (cum[si] <= pick) ++si;
            batch[i] = draw_window(sequences[si], audio_aligned[si], model.cfg.audio_dim,
                                   model.cfg.t_win, model.cfg.t_prev, cfg.min_window, rng);
            ns[i] = 1 + rng.uniform_int(schedule.steps);
            noises[i].resize(batch[i].x_cur.size());
            for (auto& v : noises[i]) v = static_cast<float>(rng.gaussian());
        }

        std::vector<std::unique_ptr<Tape>> tapes(B);
        std::vector<int> losses(B);
        DenoiseFn fn = [&model](Tape& t, const float* x_cur, int t_cur, const float* x_prev,
                                const float* audio, int64_t n) {
            return model.forward(t, x_cur, t_cur, x_prev, audio, n);
        };
        parallel_for(B, cfg.threads, [&](int64_t i) {
            tapes[i] = std::make_unique<Tape>();
            losses[i] = build_window_loss(*tapes[i], batch[i], ns[i], noises[i], schedule,
                                          model.cfg.t_prev, fn);
            tapes[i]->backward(losses[i]);
        });

        double avg = 0.0;
        for (int i = 0; i < B; ++i) avg += (*tapes[i])[losses[i]].v[0];
        avg /= B;
        if (!std::isfinite(avg))
            fail_numeric("train_ldm: non-finite loss at step " + std::to_string(step));

        params.zero_grad();
        for (int i = 0; i < B; ++i) tapes[i]->accumulate_param_grads(1.0f / B);
        if (cfg.grad_clip > 0) clip_grad_norm(params, cfg.grad_clip);
        opt.step(params);

        if (step == 0) stats.first_loss = avg;
        stats.last_loss = avg;
        smoothed = smoothed < 0 ? avg : 0.98 * smoothed + 0.02 * avg;
        stats.smoothed_loss = smoothed;
        stats.steps_run = step + 1;
        if (log && (step % cfg.log_every == 0 || step + 1 == cfg.steps)) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), R"({"step":%lld,"loss":%.6f,"smoothed":%.6f})",
                          static_cast<long long>(step), avg, smoothed);
            log->file_line(buf);
            if (step % (cfg.log_every * 10) == 0)
                log->f("ldm step %lld loss %.5f", static_cast<long long>(step), avg);
        }
    }
    if (log) log->flush();
    return stats;
}

void save_ldm_checkpoint(const std::string& path, const Denoiser& model,
                         const NoiseSchedule& schedule, const LdmCheckpointMeta& meta, int64_t step,
                         const std::string& config_hash) {
    Archive a;
    a.kind = "ldm";
    a.config_hash = config_hash;
    a.step = step;
    a.meta["schedule"] = {{"kind", to_string(schedule.kind)},
                          {"steps", schedule.steps},
                          {"beta_start", schedule.beta_start},
                          {"beta_end", schedule.beta_end}};
    a.meta["model"] = {{"token_dim", model.cfg.token_dim}, {"audio_dim", model.cfg.audio_dim},
                       {"model_dim", model.cfg.model_dim}, {"layers", model.cfg.layers},
                       {"heads", model.cfg.heads},         {"ffn_mult", model.cfg.ffn_mult},
                       {"t_win", model.cfg.t_win},         {"t_prev", model.cfg.t_prev}};
    a.meta["motion_codec_hash"] = meta.motion_codec_hash;
    a.meta["wrinkle_codec_hash"] = meta.wrinkle_codec_hash;
    a.meta["fps"] = meta.fps;
    a.meta["motion_latent_dim"] = meta.motion_latent_dim;
    a.meta["wrinkle_latent_dim"] = meta.wrinkle_latent_dim;

    ParamSet ps;
    const_cast<Denoiser&>(model).collect(ps);
    for (const Param* p : ps.items)
        a.add(p->name, std::vector<int64_t>(p->shape.begin(), p->shape.end()), p->w);
    save_archive(a, path);
}

LoadedLdm load_ldm_checkpoint(const std::string& path) {
    Archive a = load_archive(path);
    if (a.kind != "ldm") fail_data("not an ldm checkpoint: " + path);

    DenoiserConfig cfg;
    const auto& m = a.meta.at("model");
    cfg.token_dim = m.at("token_dim").get<int>();
    cfg.audio_dim = m.at("audio_dim").get<int>();
    cfg.model_dim = m.at("model_dim").get<int>();
    cfg.layers = m.at("layers").get<int>();
    cfg.heads = m.at("heads").get<int>();
    cfg.ffn_mult = m.at("ffn_mult").get<int>();
    cfg.t_win = m.at("t_win").get<int>();
    cfg.t_prev = m.at("t_prev").get<int>();

    LoadedLdm out;
    Rng tmp(0);
    out.model = Denoiser(cfg, tmp);
    const auto& s = a.meta.at("schedule");
    out.schedule = make_schedule(s.at("steps").get<int64_t>(),
                                 schedule_kind_from_string(s.at("kind").get<std::string>()),
                                 s.value("beta_start", -1.0), s.value("beta_end", -1.0));
    out.meta.motion_codec_hash = a.meta.value("motion_codec_hash", "");
    out.meta.wrinkle_codec_hash = a.meta.value("wrinkle_codec_hash", "");
    out.meta.fps = a.meta.value("fps", 0.0);
    out.meta.motion_latent_dim = a.meta.value("motion_latent_dim", 0);
    out.meta.wrinkle_latent_dim = a.meta.value("wrinkle_latent_dim", 0);
    out.step = a.step;
    out.config_hash = a.config_hash;

    ParamSet ps;
    out.model.collect(ps);
    for (Param* p : ps.items) {
        const ArchiveTensor& t = a.tensor(p->name);
        require_data(t.data.size() == p->w.size(), "ldm checkpoint tensor size mismatch: " + p->name);
        p->w = t.data;
    }
    return out;
}

}  // namespace talkie::diffusion

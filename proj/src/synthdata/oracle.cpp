#include "synthdata/oracle.h"

#include <algorithm>
#include <cmath>

#include "core/error.h"
#include "core/rng.h"
#include "geometry/raster.h"

namespace talkie::synthdata {

void IdentityStyle::validate() const {
    require_usage(alpha > 0.0, "identity style: alpha must be positive");
    require_usage(wrinkle_gain >= 0.0, "identity style: wrinkle gain must be nonnegative");
}

IdentityStyle make_identity_style(const geo::MeshTopology& topo, int resolution, uint64_t seed,
                                  int index, int total_identities) {
    require_usage(total_identities >= 2, "identity style: need at least two identities");
    Rng rng = Rng(seed).fork("identity_" + std::to_string(index));
    IdentityStyle s;
    s.name = "id" + std::to_string(index);
    // ranks are permuted per knob so the last two identities (the held-out
    // split) take interior values while the training identities cover the
    // extremes of each style range
    const int n = total_identities;
    const int rank_alpha = (n - index) % n;
    const int rank_gain = (index + n / 2) % n;
    s.alpha = 0.6 + 1.3 * rank_alpha / (n - 1.0) + rng.uniform(-0.04, 0.04);
    s.wrinkle_gain = 0.5 + 1.5 * rank_gain / (n - 1.0) + rng.uniform(-0.06, 0.06);
    s.blink_period = (index % 3 == 2) ? 0.0 : 2.2 + 2.4 * rng.uniform();
    s.blink_phase = rng.uniform() * 2.0;

    // smooth idiosyncratic field, strongest over the upper face
    s.idiosyncrasy.assign(topo.vertex_count * 3, 0.0f);
    const int n_bumps = 3;
    for (int b = 0; b < n_bumps; ++b) {
        const double cu = rng.uniform(0.2, 0.8);
        const double cv = rng.uniform(0.55, 0.9);
        const double radius = rng.uniform(0.12, 0.22);
        double dir[3] = {rng.uniform(-0.5, 0.5), rng.uniform(-0.7, 0.7), rng.uniform(-0.4, 0.4)};
        for (int64_t v = 0; v < topo.vertex_count; ++v) {
            const double du = (topo.uv[v][0] - cu) / radius;
            const double dv = (topo.uv[v][1] - cv) / radius;
            const double d = std::sqrt(du * du + dv * dv);
            if (d >= 1.0) continue;
            const double w = 0.5 * (1.0 + std::cos(M_PI * d));
            for (int c = 0; c < 3; ++c)
                s.idiosyncrasy[v * 3 + c] += static_cast<float>(0.7 * w * dir[c]);
        }
    }

    // wrinkle pattern: every identity shares the same anatomical sites
    // (forehead bands, brow, nasolabial folds, mouth corners) and differs in
    // the per-site strengths
    static constexpr struct {
        double u, v, su, sv;
    } kSites[] = {
        {0.32, 0.78, 0.11, 0.05}, {0.68, 0.78, 0.11, 0.05}, {0.50, 0.84, 0.14, 0.04},
        {0.50, 0.68, 0.06, 0.05}, {0.37, 0.42, 0.06, 0.09}, {0.63, 0.42, 0.06, 0.09},
        {0.34, 0.20, 0.07, 0.06}, {0.66, 0.20, 0.07, 0.06},
    };
    s.wrinkle_pattern.assign(static_cast<size_t>(resolution) * resolution, 0.0f);
    for (const auto& site : kSites) {
        const double weight = 0.25 + 0.75 * rng.uniform();
        for (int y = 0; y < resolution; ++y)
            for (int x = 0; x < resolution; ++x) {
                const double u = (x + 0.5) / resolution, v = (y + 0.5) / resolution;
                const double g = std::exp(-0.5 * (std::pow((u - site.u) / site.su, 2.0) +
                                                  std::pow((v - site.v) / site.sv, 2.0)));
                auto& px = s.wrinkle_pattern[static_cast<size_t>(y) * resolution + x];
                px = static_cast<float>(std::min(1.0, px + weight * g));
            }
    }
    s.validate();
    return s;
}

int64_t PhonemeTrack::total_frames() const {
    int64_t t = 0;
    for (const auto& s : segments) t += s.frames;
    return t;
}

void PhonemeTrack::validate() const {
    require_usage(!segments.empty(), "phoneme track: empty");
    for (const auto& s : segments) {
        require_usage(s.frames >= 1, "phoneme track: segment duration must be >= 1 frame");
        require_usage(s.phoneme >= 0 && s.phoneme <= kSilenceId, "phoneme track: invalid id");
    }
}

PhonemeTrack random_track(int64_t frames, uint64_t seed) {
    require_usage(frames >= 1, "random_track: frames must be positive");
    Rng rng = Rng(seed).fork("track");
    PhonemeTrack t;
    int64_t left = frames;
    int last = kSilenceId;
    while (left > 0) {
        PhonemeSegment seg;
        seg.frames = static_cast<int>(std::min<int64_t>(left, 4 + rng.uniform_int(9)));
        if (rng.uniform() < 0.18) {
            seg.phoneme = kSilenceId;
        } else {
            seg.phoneme = static_cast<int>(rng.uniform_int(kNumPhonemes));
            if (seg.phoneme == last) seg.phoneme = (seg.phoneme + 1) % kNumPhonemes;
        }
        last = seg.phoneme;
        t.segments.push_back(seg);
        left -= seg.frames;
    }
    return t;
}

std::vector<float> track_activations(const PhonemeTrack& track, int crossfade_frames) {
    track.validate();
    const int64_t T = track.total_frames();
    const int slots = kNumPhonemes + 1;
    std::vector<float> act(static_cast<size_t>(T) * slots, 0.0f);
    int64_t t0 = 0;
    int prev = -1;
    for (const auto& seg : track.segments) {
        for (int o = 0; o < seg.frames; ++o) {
            const int64_t t = t0 + o;
            double w_cur = 1.0;
            if (prev >= 0 && o < crossfade_frames) {
                const double p = (o + 0.5) / crossfade_frames;
                const double w_prev = 0.5 * (1.0 + std::cos(M_PI * p));
                w_cur = 1.0 - w_prev;
                act[t * slots + prev] += static_cast<float>(w_prev);
            }
            act[t * slots + seg.phoneme] += static_cast<float>(w_cur);
        }
        prev = seg.phoneme;
        t0 += seg.frames;
    }
    return act;
}

OracleOutput oracle_animate(const PhonemeTrack& track, const IdentityStyle& style,
                            const geo::MeshTopology& topo, int resolution, double fps) {
    track.validate();
    style.validate();
    require_usage(static_cast<int64_t>(style.idiosyncrasy.size()) == topo.vertex_count * 3,
                  "oracle_animate: idiosyncrasy field does not match topology");
    require_usage(static_cast<int64_t>(style.wrinkle_pattern.size()) ==
                      static_cast<int64_t>(resolution) * resolution,
                  "oracle_animate: wrinkle pattern does not match resolution");
    require_usage(fps > 0, "oracle_animate: fps must be positive");

    const int64_t T = track.total_frames();
    const int slots = kNumPhonemes + 1;
    const std::vector<float> act = track_activations(track);

    // speech-activity envelope for the idiosyncratic term (smoothed)
    std::vector<double> env(T);
    for (int64_t t = 0; t < T; ++t) env[t] = 1.0 - act[t * slots + kSilenceId];
    {
        std::vector<double> sm(T);
        const int r = std::max(1, static_cast<int>(std::lround(0.14 * fps)));
        for (int64_t t = 0; t < T; ++t) {
            double acc = 0;
            int n = 0;
            for (int64_t k = std::max<int64_t>(0, t - r); k <= std::min<int64_t>(T - 1, t + r); ++k) {
                acc += env[k];
                n++;
            }
            sm[t] = acc / n;
        }
        env.swap(sm);
    }

    std::vector<std::vector<float>> bases;
    for (int k = 0; k < kNumPhonemes; ++k) bases.push_back(phoneme_basis(topo, k));
    const std::vector<float> blink = blink_field(topo);

    OracleOutput out;
    out.resolution = resolution;
    out.motion.frames = T;
    out.motion.vertices = topo.vertex_count;
    out.motion.fps = fps;
    out.motion.offsets.assign(static_cast<size_t>(T) * topo.vertex_count * 3, 0.0f);

    for (int64_t t = 0; t < T; ++t) {
        float* frame = out.motion.frame(t);
        for (int k = 0; k < kNumPhonemes; ++k) {
            const double w = style.alpha * act[t * slots + k];
            if (w == 0.0) continue;
            const float* b = bases[k].data();
            for (int64_t i = 0; i < topo.vertex_count * 3; ++i)
                frame[i] += static_cast<float>(w * b[i]);
        }
        if (style.blink_period > 0.0) {
            const double tt = t / fps + style.blink_phase;
            const double phase = std::fmod(tt, style.blink_period) / 0.28;  // 0.28 s pulse
            if (phase < 1.0) {
                const double b = 0.5 * (1.0 - std::cos(2.0 * M_PI * phase));
                for (int64_t i = 0; i < topo.vertex_count * 3; ++i)
                    frame[i] += static_cast<float>(b * blink[i]);
            }
        }
        if (env[t] > 0.0) {
            for (int64_t i = 0; i < topo.vertex_count * 3; ++i)
                frame[i] += static_cast<float>(env[t] * style.idiosyncrasy[i]);
        }

        // per-vertex motion magnitude rasterized to UV drives the wrinkles
        std::vector<float> mag(topo.vertex_count);
        for (int64_t v = 0; v < topo.vertex_count; ++v) {
            const float* p = frame + v * 3;
            mag[v] = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        }
        const geo::RasterField mag_map = geo::uv_rasterize(topo, mag, 1, resolution);
        std::vector<float> wr(static_cast<size_t>(resolution) * resolution * 3);
        for (int64_t px = 0; px < static_cast<int64_t>(resolution) * resolution; ++px) {
            const double x = 1.0 + style.wrinkle_gain * style.wrinkle_pattern[px] *
                                       mag_map.texels[px] / kWrinkleMagScale;
            const double s = std::clamp(1.0 / (1.0 + std::exp(-x)), 1e-6, 1.0 - 1e-6);
            for (int c = 0; c < 3; ++c) wr[px * 3 + c] = static_cast<float>(s);
        }
        out.wrinkle_maps.push_back(std::move(wr));
    }
    return out;
}

double phoneme_freq1(int k) { return 320.0 + 170.0 * k; }
double phoneme_freq2(int k) { return 2350.0 + 300.0 * k; }

audio::AudioClip synthesize_audio(const PhonemeTrack& track, double fps, int sample_rate) {
    track.validate();
    require_usage(fps > 0 && sample_rate > 0, "synthesize_audio: bad fps or sample rate");
    audio::AudioClip clip;
    clip.sample_rate = sample_rate;
    const int64_t total =
        static_cast<int64_t>(std::llround(track.total_frames() / fps * sample_rate));
    clip.samples.assign(static_cast<size_t>(total), 0.0f);

    const int fade = static_cast<int>(std::lround(0.010 * sample_rate));  // 10 ms
    int64_t seg_start_frame = 0;
    for (const auto& seg : track.segments) {
        const auto s0 = static_cast<int64_t>(std::llround(seg_start_frame / fps * sample_rate));
        const auto s1 = static_cast<int64_t>(
            std::llround((seg_start_frame + seg.frames) / fps * sample_rate));
        seg_start_frame += seg.frames;
        if (seg.phoneme == kSilenceId) continue;
        const double f1 = phoneme_freq1(seg.phoneme);
        const double f2 = phoneme_freq2(seg.phoneme);
        for (int64_t i = s0; i < std::min(s1, total); ++i) {
            const double tt = static_cast<double>(i) / sample_rate;
            double envl = 1.0;
            if (i - s0 < fade) envl *= 0.5 * (1.0 - std::cos(M_PI * (i - s0 + 0.5) / fade));
            if (s1 - 1 - i < fade) envl *= 0.5 * (1.0 - std::cos(M_PI * (s1 - 0.5 - i) / fade));
            clip.samples[i] = static_cast<float>(
                envl * (0.32 * std::sin(2 * M_PI * f1 * tt) + 0.32 * std::sin(2 * M_PI * f2 * tt)));
        }
    }
    return clip;
}

}  // namespace talkie::synthdata

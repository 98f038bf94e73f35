#pragma once

#include <string>
#include <vector>

#include "audio/wav.h"
#include "geometry/mesh.h"
#include "synthdata/face.h"

namespace talkie::synthdata {

// Per-subject speaking/wrinkling style knobs. Oracle disentanglement is by
// construction: motion depends on (track, alpha, idiosyncrasy, blink) and the
// wrinkle response on (motion magnitude, wrinkle_gain, pattern).
struct IdentityStyle {
    std::string name;
    double alpha = 1.0;          // motion amplitude
    double wrinkle_gain = 1.0;   // c
    double blink_period = 0.0;   // seconds; 0 disables blinking
    double blink_phase = 0.0;
    std::vector<float> idiosyncrasy;    // n_v x 3 mm, upper-face flavoured
    std::vector<float> wrinkle_pattern;  // res x res in [0,1]

    void validate() const;
};

// Deterministic style for identity `index` of a corpus seeded with `seed`.
IdentityStyle make_identity_style(const geo::MeshTopology& topo, int resolution, uint64_t seed,
                                  int index, int total_identities);

struct PhonemeSegment {
    int phoneme = kSilenceId;  // 0..kNumPhonemes-1 or kSilenceId
    int frames = 1;
};

struct PhonemeTrack {
    std::vector<PhonemeSegment> segments;

    int64_t total_frames() const;
    void validate() const;
};

PhonemeTrack random_track(int64_t frames, uint64_t seed);

// Per-frame activation weights over [kNumPhonemes + 1] slots (last is
// silence), with half-cosine crossfades at segment boundaries.
std::vector<float> track_activations(const PhonemeTrack& track, int crossfade_frames = 2);

struct OracleOutput {
    geo::MotionSequence motion;                    // frames x n_v x 3 mm
    std::vector<std::vector<float>> wrinkle_maps;  // frames x (res*res*3), HWC in (0,1)
    int resolution = 0;
};

// Millimetres of local motion per unit of wrinkle response; keeps the sigmoid
// inside its responsive band for the style-gain range used by the corpus.
inline constexpr double kWrinkleMagScale = 4.0;

// m_t = alpha * sum_k w_k(t) B_k + blink(t) * blink_field + idiosyncrasy * env(t)
// wrinkle(px) = sigmoid(1 + gain * pattern(px) * |motion| rasterized to UV)
OracleOutput oracle_animate(const PhonemeTrack& track, const IdentityStyle& style,
                            const geo::MeshTopology& topo, int resolution, double fps);

// Each phoneme renders as two fixed sinusoids with 10 ms fades; silence is
// rendered as exact zeros.
audio::AudioClip synthesize_audio(const PhonemeTrack& track, double fps, int sample_rate);

double phoneme_freq1(int k);
double phoneme_freq2(int k);

}  // namespace talkie::synthdata

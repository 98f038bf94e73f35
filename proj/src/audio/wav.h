#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace talkie::audio {

// Mono waveform, float samples in [-1, 1].
struct AudioClip {
    std::vector<float> samples;
    int sample_rate = 0;

    double seconds() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// 16-bit PCM mono WAV. Stereo input is downmixed; other encodings rejected.
void save_wav(const AudioClip& clip, const std::string& path);
AudioClip load_wav(const std::string& path);

// Linear resampler used when a backend needs a specific rate.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace talkie::audio

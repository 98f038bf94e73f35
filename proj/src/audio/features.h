#pragma once

#include <memory>
#include <string>
#include <vector>

#include "audio/wav.h"

namespace talkie::audio {

struct AudioFeatureSequence {
    int64_t frames = 0;
    int dim = 0;
    double frame_rate = 0.0;  // feature rows per second
    std::vector<float> values;  // frames * dim

    const float* row(int64_t i) const { return values.data() + i * dim; }
};

// Pluggable per-frame audio feature interface.
class FeatureExtractor {
  public:
    virtual ~FeatureExtractor() = default;
    virtual AudioFeatureSequence extract(const AudioClip& clip) const = 0;
    virtual int dim() const = 0;
    virtual std::string name() const = 0;
};

struct LogMelConfig {
    int sample_rate = 16000;
    int bands = 80;
    double window_ms = 25.0;
    double hop_ms = 10.0;
    double floor_power = 1e-10;
};

// Default dependency-free backend: Hann window, power FFT, HTK mel filterbank,
// log compression. Input at another rate is resampled internally.
class LogMelExtractor : public FeatureExtractor {
  public:
    explicit LogMelExtractor(LogMelConfig cfg = {});
    AudioFeatureSequence extract(const AudioClip& clip) const override;
    int dim() const override { return cfg_.bands; }
    std::string name() const override { return "logmel"; }

    // Center frequency (Hz) of a mel band; used by tests.
    double band_center_hz(int band) const;

  private:
    LogMelConfig cfg_;
    int fft_size_ = 0;
    std::vector<double> mel_edges_hz_;
};

// Second backend slot: pre-extracted embeddings dumped to the named-array
// format (sidecar must carry "frame_rate").
AudioFeatureSequence load_feature_dump(const std::string& path);
void save_feature_dump(const AudioFeatureSequence& seq, const std::string& base,
                       const std::string& name);

// Linear interpolation of the feature rows onto T uniformly spaced positions;
// first and last rows are preserved exactly.
std::vector<float> align_features(const AudioFeatureSequence& features, int64_t target_frames);

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& backend, const LogMelConfig& cfg);

}  // namespace talkie::audio

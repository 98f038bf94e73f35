#include "audio/features.h"

#include <algorithm>
#include <cmath>
#include <complex>

#include "core/error.h"
#include "core/narray.h"

namespace talkie::audio {

namespace {

constexpr double kPi = 3.14159265358979323846;

// In-place iterative radix-2 FFT.
void fft(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (size_t j = 0; j < len / 2; ++j) {
                auto u = a[i + j];
                auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

LogMelExtractor::LogMelExtractor(LogMelConfig cfg) : cfg_(cfg) {
    require_usage(cfg_.bands >= 1, "logmel: bands must be >= 1");
    require_usage(cfg_.sample_rate > 0, "logmel: sample_rate must be positive");
    const int win = static_cast<int>(std::lround(cfg_.sample_rate * cfg_.window_ms / 1000.0));
    fft_size_ = 1;
    while (fft_size_ < win) fft_size_ <<= 1;

    const double nyquist = cfg_.sample_rate / 2.0;
    const double mel_lo = hz_to_mel(0.0), mel_hi = hz_to_mel(nyquist);
    mel_edges_hz_.resize(cfg_.bands + 2);
    for (int i = 0; i < cfg_.bands + 2; ++i)
        mel_edges_hz_[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg_.bands + 1));
}

double LogMelExtractor::band_center_hz(int band) const { return mel_edges_hz_.at(band + 1); }

AudioFeatureSequence LogMelExtractor::extract(const AudioClip& clip_in) const {
    require_usage(!clip_in.samples.empty(), "extract_features: empty clip");
    require_usage(clip_in.sample_rate > 0, "extract_features: bad sample rate");
    const AudioClip clip =
        clip_in.sample_rate == cfg_.sample_rate ? clip_in : resample(clip_in, cfg_.sample_rate);

    const int win = static_cast<int>(std::lround(cfg_.sample_rate * cfg_.window_ms / 1000.0));
    const int hop = static_cast<int>(std::lround(cfg_.sample_rate * cfg_.hop_ms / 1000.0));
    const auto n = static_cast<int64_t>(clip.samples.size());
    const int64_t frames = n >= win ? 1 + (n - win) / hop : 1;

    std::vector<double> hann(win);
    for (int i = 0; i < win; ++i) hann[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (win - 1));

    const int n_bins = fft_size_ / 2 + 1;
    const double bin_hz = static_cast<double>(cfg_.sample_rate) / fft_size_;

    AudioFeatureSequence out;
    out.frames = frames;
    out.dim = cfg_.bands;
    out.frame_rate = static_cast<double>(cfg_.sample_rate) / hop;
    out.values.assign(static_cast<size_t>(frames) * cfg_.bands, 0.0f);

    std::vector<std::complex<double>> buf(fft_size_);
    std::vector<double> power(n_bins);
    for (int64_t f = 0; f < frames; ++f) {
        const int64_t start = f * hop;
        for (int i = 0; i < fft_size_; ++i) {
            const int64_t idx = start + i;
            const double s = (i < win && idx < n) ? clip.samples[idx] * hann[i] : 0.0;
            buf[i] = {s, 0.0};
        }
        fft(buf);
        for (int b = 0; b < n_bins; ++b) power[b] = std::norm(buf[b]);

        float* row = out.values.data() + f * cfg_.bands;
        for (int m = 0; m < cfg_.bands; ++m) {
            const double lo = mel_edges_hz_[m], mid = mel_edges_hz_[m + 1], hi = mel_edges_hz_[m + 2];
            double acc = 0.0;
            for (int b = 0; b < n_bins; ++b) {
                const double hz = b * bin_hz;
                double w = 0.0;
                if (hz >= lo && hz <= mid && mid > lo)
                    w = (hz - lo) / (mid - lo);
                else if (hz > mid && hz <= hi && hi > mid)
                    w = (hi - hz) / (hi - mid);
                acc += w * power[b];
            }
            row[m] = static_cast<float>(std::log(acc + cfg_.floor_power));
        }
    }
    return out;
}

AudioFeatureSequence load_feature_dump(const std::string& path) {
    NamedArray a = load_array(path);
    require_data(a.shape.size() == 2, "feature dump must be a 2-d array [frames, dim]: " + path);
    AudioFeatureSequence seq;
    seq.frames = a.shape[0];
    seq.dim = static_cast<int>(a.shape[1]);
    seq.frame_rate = a.extra.value("frame_rate", 0.0);
    require_data(seq.frame_rate > 0.0, "feature dump sidecar missing frame_rate: " + path);
    seq.values = std::move(a.data);
    return seq;
}

void save_feature_dump(const AudioFeatureSequence& seq, const std::string& base,
                       const std::string& name) {
    NamedArray a = make_array(name, {seq.frames, seq.dim});
    a.data = seq.values;
    a.extra["frame_rate"] = seq.frame_rate;
    save_array(a, base);
}

std::vector<float> align_features(const AudioFeatureSequence& features, int64_t target_frames) {
    require_usage(features.frames >= 1, "align_features: need at least one feature row");
    require_usage(target_frames >= 1, "align_features: target frame count must be >= 1");
    const int64_t L = features.frames;
    const int d = features.dim;
    std::vector<float> out(static_cast<size_t>(target_frames) * d);
    if (L == target_frames) {
        std::copy(features.values.begin(), features.values.end(), out.begin());
        return out;
    }
    for (int64_t i = 0; i < target_frames; ++i) {
        const double s = target_frames == 1
                             ? 0.0
                             : static_cast<double>(i) * static_cast<double>(L - 1) /
                                   static_cast<double>(target_frames - 1);
        const auto i0 = std::min<int64_t>(static_cast<int64_t>(s), L - 1);
        const auto i1 = std::min<int64_t>(i0 + 1, L - 1);
        const double f = s - static_cast<double>(i0);
        const float* r0 = features.row(i0);
        const float* r1 = features.row(i1);
        float* dst = out.data() + i * d;
        for (int c = 0; c < d; ++c)
            dst[c] = static_cast<float>((1.0 - f) * r0[c] + f * r1[c]);
    }
    return out;
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& backend, const LogMelConfig& cfg) {
    if (backend == "logmel") return std::make_unique<LogMelExtractor>(cfg);
    fail_usage("unknown audio feature backend: " + backend + " (available: logmel)");
}

}  // namespace talkie::audio

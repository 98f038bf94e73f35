#include "audio/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/error.h"

namespace talkie::audio {

namespace {

void put_u32(std::ofstream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_u16(std::ofstream& out, uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); }

uint32_t get_u32(std::ifstream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
uint16_t get_u16(std::ifstream& in) {
    uint16_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 2);
    return v;
}

}  // namespace

void save_wav(const AudioClip& clip, const std::string& path) {
    require_usage(clip.sample_rate > 0, "save_wav: sample_rate must be positive");
    std::filesystem::path p(path);
    if (!p.parent_path().empty()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_data("cannot write wav: " + path);

    const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
    out.write("RIFF", 4);
    put_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<uint32_t>(clip.sample_rate));
    put_u32(out, static_cast<uint32_t>(clip.sample_rate * 2));
    put_u16(out, 2);
    put_u16(out, 16);
    out.write("data", 4);
    put_u32(out, data_bytes);
    for (float s : clip.samples) {
        const double c = std::clamp(static_cast<double>(s), -1.0, 1.0);
        const auto q = static_cast<int16_t>(std::lrint(c * 32767.0));
        out.write(reinterpret_cast<const char*>(&q), 2);
    }
    if (!out) fail_data("short write to wav: " + path);
}

AudioClip load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("cannot open wav: " + path);
    char tag[5] = {0};
    in.read(tag, 4);
    if (std::strncmp(tag, "RIFF", 4) != 0) fail_data("not a RIFF file: " + path);
    get_u32(in);
    in.read(tag, 4);
    if (std::strncmp(tag, "WAVE", 4) != 0) fail_data("not a WAVE file: " + path);

    AudioClip clip;
    uint16_t channels = 0, bits = 0, format = 0;
    bool got_fmt = false;
    while (in) {
        in.read(tag, 4);
        if (!in) break;
        uint32_t size = get_u32(in);
        if (std::strncmp(tag, "fmt ", 4) == 0) {
            format = get_u16(in);
            channels = get_u16(in);
            clip.sample_rate = static_cast<int>(get_u32(in));
            get_u32(in);  // byte rate
            get_u16(in);  // block align
            bits = get_u16(in);
            if (size > 16) in.seekg(size - 16, std::ios::cur);
            got_fmt = true;
        } else if (std::strncmp(tag, "data", 4) == 0) {
            if (!got_fmt) fail_data("wav data before fmt chunk: " + path);
            if (format != 1 || bits != 16) fail_data("unsupported wav encoding (want 16-bit PCM): " + path);
            if (channels < 1 || channels > 2) fail_data("unsupported wav channel count: " + path);
            const size_t frames = size / (2 * channels);
            clip.samples.resize(frames);
            std::vector<int16_t> raw(static_cast<size_t>(size) / 2);
            in.read(reinterpret_cast<char*>(raw.data()), size);
            if (!in) fail_data("truncated wav data: " + path);
            for (size_t i = 0; i < frames; ++i) {
                double acc = 0.0;
                for (int c = 0; c < channels; ++c) acc += raw[i * channels + c];
                clip.samples[i] = static_cast<float>(acc / channels / 32767.0);
            }
            return clip;
        } else {
            in.seekg(size + (size & 1), std::ios::cur);
        }
    }
    fail_data("wav has no data chunk: " + path);
}

AudioClip resample(const AudioClip& clip, int target_rate) {
    require_usage(target_rate > 0, "resample: target rate must be positive");
    if (clip.sample_rate == target_rate || clip.samples.empty()) {
        AudioClip out = clip;
        out.sample_rate = target_rate;
        return out;
    }
    AudioClip out;
    out.sample_rate = target_rate;
    const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
    const auto n = static_cast<int64_t>(std::floor((clip.samples.size() - 1) / ratio)) + 1;
    out.samples.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        const double src = i * ratio;
        const auto i0 = static_cast<int64_t>(src);
        const auto i1 = std::min<int64_t>(i0 + 1, clip.samples.size() - 1);
        const double f = src - i0;
        out.samples[i] = static_cast<float>((1 - f) * clip.samples[i0] + f * clip.samples[i1]);
    }
    return out;
}

}  // namespace talkie::audio

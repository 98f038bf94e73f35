#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "audio/features.h"
#include "audio/wav.h"
#include "core/error.h"
#include "doctest.h"

using namespace talkie;
using namespace talkie::audio;

TEST_CASE("wav round-trip at 16 kHz mono") {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(1600);
    for (size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = static_cast<float>(0.8 * std::sin(2 * 3.14159265 * 440.0 * i / 16000.0));
    const auto path = (std::filesystem::temp_directory_path() / "talkie_wav_test.wav").string();
    save_wav(clip, path);
    auto back = load_wav(path);
    CHECK(back.sample_rate == 16000);
    REQUIRE(back.samples.size() == clip.samples.size());
    for (size_t i = 0; i < clip.samples.size(); ++i)
        CHECK(std::abs(back.samples[i] - clip.samples[i]) < 1.0 / 32000.0);
    std::filesystem::remove(path);
}

TEST_CASE("silence produces identical floor-valued feature rows") {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.assign(16000, 0.0f);  // 1 s of silence
    LogMelExtractor mel;
    auto f = mel.extract(clip);
    CHECK(f.dim == 80);
    CHECK(f.frames > 90);
    const float* first = f.row(0);
    for (int64_t r = 0; r < f.frames; ++r)
        for (int c = 0; c < f.dim; ++c) CHECK(f.row(r)[c] == first[c]);
    // floor-valued: log of the configured floor power
    CHECK(first[0] == doctest::Approx(std::log(1e-10)).epsilon(1e-6));
}

TEST_CASE("a sinusoid at a mel band center peaks in that band") {
    LogMelExtractor mel;
    for (int band : {10, 25, 40, 55, 70}) {
        const double hz = mel.band_center_hz(band);
        AudioClip clip;
        clip.sample_rate = 16000;
        clip.samples.resize(16000);
        for (size_t i = 0; i < clip.samples.size(); ++i)
            clip.samples[i] = static_cast<float>(0.7 * std::sin(2 * 3.14159265 * hz * i / 16000.0));
        auto f = mel.extract(clip);
        // inspect a middle frame
        const float* row = f.row(f.frames / 2);
        int argmax = 0;
        for (int c = 1; c < f.dim; ++c)
            if (row[c] > row[argmax]) argmax = c;
        CHECK(argmax == band);
    }
}

TEST_CASE("feature extraction is deterministic") {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(8000);
    for (size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = static_cast<float>(0.5 * std::sin(0.01 * i) + 0.2 * std::sin(0.13 * i));
    LogMelExtractor mel;
    auto f1 = mel.extract(clip);
    auto f2 = mel.extract(clip);
    CHECK(f1.values == f2.values);
}

TEST_CASE("unsupported sample rates are resampled internally") {
    AudioClip clip;
    clip.sample_rate = 48000;
    clip.samples.resize(48000);
    const double hz = 1000.0;
    for (size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = static_cast<float>(0.7 * std::sin(2 * 3.14159265 * hz * i / 48000.0));
    LogMelExtractor mel;
    auto f = mel.extract(clip);
    CHECK(f.frames > 90);
    const float* row = f.row(f.frames / 2);
    int argmax = 0;
    for (int c = 1; c < f.dim; ++c)
        if (row[c] > row[argmax]) argmax = c;
    // peak should sit in the band whose center is nearest 1 kHz
    int nearest = 0;
    double best = 1e18;
    for (int b = 0; b < f.dim; ++b) {
        const double d = std::abs(mel.band_center_hz(b) - hz);
        if (d < best) {
            best = d;
            nearest = b;
        }
    }
    CHECK(std::abs(argmax - nearest) <= 1);
}

TEST_CASE("empty clips are rejected") {
    AudioClip clip;
    clip.sample_rate = 16000;
    LogMelExtractor mel;
    CHECK_THROWS_AS(mel.extract(clip), Error);
}

TEST_CASE("align_features is identity when lengths match") {
    AudioFeatureSequence f;
    f.frames = 7;
    f.dim = 3;
    f.frame_rate = 100;
    f.values.resize(21);
    for (size_t i = 0; i < f.values.size(); ++i) f.values[i] = static_cast<float>(i) * 0.37f;
    auto out = align_features(f, 7);
    CHECK(out == f.values);
}

TEST_CASE("align_features of constant rows stays constant") {
    AudioFeatureSequence f;
    f.frames = 4;
    f.dim = 2;
    f.frame_rate = 50;
    f.values.assign(8, 3.25f);
    for (int T : {1, 2, 9, 33}) {
        auto out = align_features(f, T);
        CHECK(static_cast<int>(out.size()) == T * 2);
        for (float v : out) CHECK(v == 3.25f);
    }
}

TEST_CASE("align_features matches closed-form linear interpolation") {
    AudioFeatureSequence f;
    f.frames = 3;
    f.dim = 1;
    f.frame_rate = 100;
    f.values = {0.0f, 1.0f, 2.0f};
    auto out = align_features(f, 5);
    REQUIRE(out.size() == 5);
    CHECK(out[0] == doctest::Approx(0.0));
    CHECK(out[1] == doctest::Approx(0.5));
    CHECK(out[2] == doctest::Approx(1.0));
    CHECK(out[3] == doctest::Approx(1.5));
    CHECK(out[4] == doctest::Approx(2.0));
}

TEST_CASE("align_features commutes with affine feature scaling") {
    AudioFeatureSequence f;
    f.frames = 6;
    f.dim = 2;
    f.frame_rate = 100;
    f.values.resize(12);
    for (size_t i = 0; i < f.values.size(); ++i) f.values[i] = static_cast<float>(std::sin(0.9 * i));
    auto base = align_features(f, 11);
    AudioFeatureSequence g = f;
    for (auto& v : g.values) v = 2.0f * v + 1.0f;
    auto scaled = align_features(g, 11);
    for (size_t i = 0; i < base.size(); ++i)
        CHECK(scaled[i] == doctest::Approx(2.0f * base[i] + 1.0f).epsilon(1e-5));
}

TEST_CASE("feature dumps round-trip with frame_rate metadata") {
    AudioFeatureSequence f;
    f.frames = 5;
    f.dim = 4;
    f.frame_rate = 60.0;
    f.values.resize(20);
    for (size_t i = 0; i < f.values.size(); ++i) f.values[i] = static_cast<float>(i);
    const auto base = (std::filesystem::temp_directory_path() / "talkie_feat_test").string();
    save_feature_dump(f, base, "external_embedding");
    auto back = load_feature_dump(base);
    CHECK(back.frames == 5);
    CHECK(back.dim == 4);
    CHECK(back.frame_rate == 60.0);
    CHECK(back.values == f.values);
    std::filesystem::remove(base + ".f32");
    std::filesystem::remove(base + ".json");
}

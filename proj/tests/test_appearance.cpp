#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "appearance/wrinkle.h"
#include "core/error.h"
#include "core/rng.h"
#include "doctest.h"

using namespace talkie;
using namespace talkie::appearance;

namespace {

TextureFrame random_texture(int h, int w, Rng& rng, double lo = 0.0, double hi = 1.0) {
    TextureFrame t;
    t.height = h;
    t.width = w;
    t.rgb.resize(static_cast<size_t>(h) * w * 3);
    for (auto& v : t.rgb) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

}  // namespace

TEST_CASE("encode of the neutral against itself is the constant sigmoid(1)") {
    Rng rng(1);
    auto neutral = random_texture(8, 8, rng, 0.05, 1.0);  // everywhere above epsilon
    auto w = wrinkle_encode(neutral, neutral);
    const double expect = 1.0 / (1.0 + std::exp(-1.0));
    for (float v : w.values) CHECK(v == doctest::Approx(expect).epsilon(1e-6));
    CHECK(expect == doctest::Approx(0.73106).epsilon(1e-4));
}

TEST_CASE("zero texture pixels encode to sigmoid(0) = 0.5") {
    TextureFrame tex, neutral;
    tex.height = tex.width = 4;
    neutral.height = neutral.width = 4;
    tex.rgb.assign(48, 0.0f);
    neutral.rgb.assign(48, 0.5f);
    auto w = wrinkle_encode(tex, neutral);
    for (float v : w.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("wrinkle values stay strictly inside (0,1)") {
    Rng rng(2);
    auto tex = random_texture(16, 16, rng);
    auto neutral = random_texture(16, 16, rng);
    auto w = wrinkle_encode(tex, neutral);
    for (float v : w.values) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
}

TEST_CASE("apply inverts encode where the neutral is above epsilon") {
    Rng rng(3);
    WrinkleParams params;
    for (int trial = 0; trial < 4; ++trial) {
        // texture-like inputs: the ratio stays in the invertible range of the
        // float32 sigmoid (saturation starts around ratio 16)
        auto tex = random_texture(12, 12, rng, 0.0, 1.0);
        auto neutral = random_texture(12, 12, rng, 0.2, 1.0);
        auto w = wrinkle_encode(tex, neutral, params);
        auto back = wrinkle_apply(w, neutral, params);
        for (size_t i = 0; i < tex.rgb.size(); ++i)
            CHECK(std::abs(back.rgb[i] - tex.rgb[i]) < 1e-5);
    }
}

TEST_CASE("apply of sigmoid(1) returns the neutral; 0.5 returns black") {
    Rng rng(4);
    auto neutral = random_texture(6, 6, rng, 0.05, 1.0);
    WrinkleMap w;
    w.height = w.width = 6;
    w.values.assign(108, static_cast<float>(1.0 / (1.0 + std::exp(-1.0))));
    auto tex = wrinkle_apply(w, neutral);
    for (size_t i = 0; i < tex.rgb.size(); ++i)
        CHECK(tex.rgb[i] == doctest::Approx(neutral.rgb[i]).epsilon(1e-5));

    std::fill(w.values.begin(), w.values.end(), 0.5f);
    auto black = wrinkle_apply(w, neutral);
    for (float v : black.rgb) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("encoding is monotone in the texture for a fixed neutral") {
    Rng rng(5);
    auto neutral = random_texture(8, 8, rng, 0.1, 1.0);
    auto dark = random_texture(8, 8, rng, 0.0, 0.45);
    TextureFrame bright = dark;
    for (auto& v : bright.rgb) v += 0.5f;
    auto wd = wrinkle_encode(dark, neutral);
    auto wb = wrinkle_encode(bright, neutral);
    for (size_t i = 0; i < wd.values.size(); ++i) CHECK(wb.values[i] > wd.values[i]);
}

TEST_CASE("resolution mismatch raises an argument error") {
    TextureFrame a, b;
    a.height = a.width = 4;
    a.rgb.assign(48, 0.5f);
    b.height = b.width = 8;
    b.rgb.assign(192, 0.5f);
    CHECK_THROWS_AS(wrinkle_encode(a, b), Error);
}

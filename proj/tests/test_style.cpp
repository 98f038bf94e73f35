#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <filesystem>

#include "codec/model.h"
#include "core/error.h"
#include "core/rng.h"
#include "doctest.h"
#include "style/pivot.h"

using namespace talkie;
using namespace talkie::style;

TEST_CASE("pivot of a constant sequence is that value") {
    std::vector<float> latents;
    const std::vector<float> z = {0.5f, -1.25f, 3.0f};
    for (int t = 0; t < 7; ++t) latents.insert(latents.end(), z.begin(), z.end());
    auto p = compute_pivot(latents, 7, 3);
    CHECK(p.vector == z);
    CHECK(p.frame_count == 7);
}

TEST_CASE("pivot is the arithmetic mean") {
    std::vector<float> latents = {1, 0, 3, 0};
    auto p = compute_pivot(latents, 2, 2);
    CHECK(p.vector[0] == doctest::Approx(2.0));
    CHECK(p.vector[1] == doctest::Approx(0.0));
}

TEST_CASE("pivot is invariant under frame permutations") {
    Rng rng(1);
    const int64_t T = 9, D = 5;
    std::vector<float> latents(T * D);
    for (auto& v : latents) v = static_cast<float>(rng.uniform(-2, 2));
    auto p1 = compute_pivot(latents, T, D);

    std::vector<int> order = {8, 3, 1, 0, 7, 2, 6, 4, 5};
    std::vector<float> shuffled(T * D);
    for (int64_t t = 0; t < T; ++t)
        std::copy(latents.begin() + order[t] * D, latents.begin() + (order[t] + 1) * D,
                  shuffled.begin() + t * D);
    auto p2 = compute_pivot(shuffled, T, D);
    for (int64_t k = 0; k < D; ++k) CHECK(p1.vector[k] == doctest::Approx(p2.vector[k]).epsilon(1e-7));
}

TEST_CASE("empty sequences are rejected") {
    std::vector<float> empty;
    CHECK_THROWS_AS(compute_pivot(empty, 0, 4), Error);
}

TEST_CASE("offset round trip is exact and offsets are mean-centered") {
    Rng rng(2);
    const int64_t T = 12, D = 6;
    std::vector<float> latents(T * D);
    for (auto& v : latents) v = static_cast<float>(rng.uniform(-3, 3));
    auto p = compute_pivot(latents, T, D);
    auto off = to_offsets(latents, p);
    auto back = from_offsets(off, p);
    // identity to machine precision (float storage rounds (z-p)+p)
    for (size_t i = 0; i < latents.size(); ++i)
        CHECK(std::abs(back[i] - latents[i]) <=
              1e-6f * std::max(1.0f, std::abs(latents[i])));

    for (int64_t k = 0; k < D; ++k) {
        double mean = 0;
        for (int64_t t = 0; t < T; ++t) mean += off[t * D + k];
        mean /= static_cast<double>(T);
        CHECK(std::abs(mean) < 1e-5);
    }

    StylePivot wrong;
    wrong.vector.assign(D + 1, 0.0f);
    CHECK_THROWS_AS(to_offsets(latents, wrong), Error);
}

TEST_CASE("pivot files round-trip with provenance metadata") {
    StylePivot p;
    p.vector = {1.5f, -0.25f, 0.0f, 9.0f};
    p.stream = "wrinkle";
    p.identity = "id3";
    p.frame_count = 600;
    p.codec_checkpoint_hash = "abc123";
    const auto base = (std::filesystem::temp_directory_path() / "talkie_pivot_test").string();
    save_pivot(p, base);
    auto q = load_pivot(base);
    CHECK(q.vector == p.vector);
    CHECK(q.stream == "wrinkle");
    CHECK(q.identity == "id3");
    CHECK(q.frame_count == 600);
    CHECK(q.codec_checkpoint_hash == "abc123");
    std::filesystem::remove(base + ".f32");
    std::filesystem::remove(base + ".json");
}

TEST_CASE("decoding quantize(pivot + 0) reproduces the pivot decode") {
    Rng rng(3);
    codec::CodecModelConfig cfg;
    cfg.resolution = 32;
    cfg.latent_dim = 4;
    cfg.codebook_size = 16;
    cfg.channels = {8, 12, 16};
    codec::CodecModel model(cfg, rng);

    // a pivot living in the codec latent space
    const int side = cfg.latent_side();
    std::vector<float> pvec(static_cast<size_t>(side) * side * cfg.latent_dim);
    for (auto& v : pvec) v = static_cast<float>(rng.uniform(-1, 1));
    StylePivot pivot;
    pivot.vector = pvec;

    auto zero = std::vector<float>(pvec.size(), 0.0f);
    auto zsum = from_offsets(zero, pivot);  // p + 0

    codec::LatentGrid ga, gb;
    ga.h = gb.h = side;
    ga.w = gb.w = side;
    ga.d = gb.d = cfg.latent_dim;
    ga.values = pvec;
    gb.values = zsum;
    auto book = model.codebook_view();
    auto da = codec::codec_decode(model, codec::quantize(ga, book));
    auto db = codec::codec_decode(model, codec::quantize(gb, book));
    CHECK(da == db);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "codec/codebook.h"
#include "codec/model.h"
#include "codec/trainer.h"
#include "core/error.h"
#include "core/rng.h"
#include "doctest.h"
#include "nn/ops.h"

using namespace talkie;
using namespace talkie::codec;

namespace {

Codebook toy_codebook() {
    Codebook b;
    b.size = 2;
    b.dim = 2;
    b.entries = {0, 0, 1, 1};
    return b;
}

CodecModelConfig tiny_config() {
    CodecModelConfig cfg;
    cfg.resolution = 32;
    cfg.latent_dim = 6;
    cfg.codebook_size = 24;
    cfg.channels = {8, 12, 16, 24};  // 3 stages -> 4x4 latent
    return cfg;
}

std::vector<float> smooth_map(int res, int seed) {
    Rng rng(seed);
    const double f1 = rng.uniform(0.5, 2.0), f2 = rng.uniform(0.5, 2.0);
    const double p = rng.uniform(0, 6.28);
    std::vector<float> m(static_cast<size_t>(res) * res * 3);
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            const double u = (x + 0.5) / res, v = (y + 0.5) / res;
            const int64_t i = (static_cast<int64_t>(y) * res + x) * 3;
            m[i] = static_cast<float>(0.8 * std::sin(6.28 * f1 * u + p) * std::cos(3.1 * f2 * v));
            m[i + 1] = static_cast<float>(0.6 * std::cos(4.2 * f1 * v));
            m[i + 2] = static_cast<float>(0.5 * std::sin(2.7 * f2 * (u + v)));
        }
    return m;
}

}  // namespace

TEST_CASE("quantize picks the nearest entry by inspection") {
    Codebook b = toy_codebook();
    LatentGrid g;
    g.h = 1;
    g.w = 1;
    g.d = 2;
    g.values = {0.1f, 0.2f};
    auto q = quantize(g, b);
    CHECK(q.quantized);
    CHECK(q.indices[0] == 0);
    CHECK(q.values[0] == 0.0f);
    CHECK(q.values[1] == 0.0f);
}

TEST_CASE("quantize is idempotent on already-snapped values") {
    Codebook b = toy_codebook();
    LatentGrid g;
    g.h = 2;
    g.w = 1;
    g.d = 2;
    g.values = {1.0f, 1.0f, 0.2f, -0.1f};
    auto q1 = quantize(g, b);
    CHECK(q1.indices[0] == 1);
    CHECK(q1.indices[1] == 0);
    // feed the snapped values back through as a continuous grid
    LatentGrid g2;
    g2.h = 2;
    g2.w = 1;
    g2.d = 2;
    g2.values = q1.values;
    auto q2 = quantize(g2, b);
    CHECK(q2.values == q1.values);
    CHECK(q2.indices == q1.indices);
    // quantizing a quantized grid violates the contract
    CHECK_THROWS_AS(quantize(q1, b), Error);
}

TEST_CASE("ties resolve to the lowest index") {
    Codebook b;
    b.size = 3;
    b.dim = 1;
    b.entries = {1.0f, -1.0f, 1.0f};  // entries 0 and 2 identical
    LatentGrid g;
    g.h = 1;
    g.w = 2;
    g.d = 1;
    g.values = {0.0f, 0.9f};  // 0.0 is equidistant from +1 and -1
    auto q = quantize(g, b);
    CHECK(q.indices[0] == 0);
    CHECK(q.indices[1] == 0);
}

TEST_CASE("quantizer agrees with an exhaustive nearest-neighbor scan") {
    Rng rng(314);
    Codebook b;
    b.size = 128;
    b.dim = 8;
    b.entries.resize(128 * 8);
    for (auto& v : b.entries) v = static_cast<float>(rng.gaussian());

    LatentGrid g;
    g.h = 4;
    g.w = 4;
    g.d = 8;
    g.values.resize(4 * 4 * 8);
    for (auto& v : g.values) v = static_cast<float>(rng.gaussian());
    auto q = quantize(g, b);

    for (int cell = 0; cell < g.cells(); ++cell) {
        // independent scan in double precision, reversed inner loop order
        int best = -1;
        double best_d = 0;
        for (int c = b.size - 1; c >= 0; --c) {
            double d = 0;
            for (int k = 0; k < b.dim; ++k) {
                const double diff =
                    static_cast<double>(g.values[cell * 8 + k]) - b.entries[c * 8 + k];
                d += diff * diff;
            }
            if (best < 0 || d < best_d || (d == best_d && c < best)) {
                best = c;
                best_d = d;
            }
        }
        REQUIRE(q.indices[cell] == best);
    }
}

TEST_CASE("quantize validates dimensions") {
    Codebook b = toy_codebook();
    LatentGrid g;
    g.h = 1;
    g.w = 1;
    g.d = 3;
    g.values = {0, 0, 0};
    CHECK_THROWS_AS(quantize(g, b), Error);
}

TEST_CASE("encode/decode shape contract and determinism") {
    Rng rng(5);
    CodecModel model(tiny_config(), rng);
    auto map = smooth_map(32, 1);
    auto chw = hwc_to_chw(map, 32, 32, 3);

    LatentGrid z = codec_encode(model, chw);
    CHECK(z.h == 4);
    CHECK(z.w == 4);
    CHECK(z.d == 6);
    CHECK(!z.quantized);

    LatentGrid z2 = codec_encode(model, chw);
    CHECK(z.values == z2.values);  // bit-identical in evaluation mode

    auto q = quantize(z, model.codebook_view());
    auto dec1 = codec_decode(model, q);
    auto dec2 = codec_decode(model, q);
    CHECK(dec1.size() == chw.size());
    CHECK(dec1 == dec2);

    CHECK_THROWS_AS(codec_decode(model, z), Error);  // unquantized input
}

TEST_CASE("encode rejects indivisible resolutions") {
    CodecModelConfig cfg = tiny_config();
    cfg.resolution = 36;  // not divisible by 2^3
    Rng rng(6);
    CHECK_THROWS_AS(CodecModel(cfg, rng), Error);
}

TEST_CASE("vq code loss matches the hand-computed two-vector case") {
    nn::Param cb = nn::make_param("cb", {2, 2});
    cb.w = {0, 0, 1, 1};
    nn::Tape t;
    std::vector<float> zv = {0.5f, 0.0f};
    const int z = nn::constant(t, {1, 2}, zv.data());
    const int loss = vq_code_loss(t, z, cb, {0}, 0.25);
    // mse(z, e0) = (0.25 + 0)/2 = 0.125; total = 0.125 * (1 + 0.25)
    CHECK(t[loss].v[0] == doctest::Approx(0.15625).epsilon(1e-7));
}

TEST_CASE("loss breakdown: zero for identical reconstruction, exact decomposition") {
    Rng rng(7);
    // rec = L1(x,x) = 0 and per(x,x) = 0 by construction
    PerceptualNet per(3, 42);
    nn::Tape t;
    auto map = smooth_map(32, 3);
    auto chw = hwc_to_chw(map, 32, 32, 3);
    const int x = nn::constant(t, {3, 32, 32}, chw.data());
    CHECK(t[nn::l1(t, x, x)].v[0] == 0.0f);
    CHECK(t[per.distance(t, x, x)].v[0] == 0.0f);

    // Eq-style decomposition: total equals the weighted component sum
    CodecModel model(tiny_config(), rng);
    Rng drng(8);
    Discriminator disc(model.cfg, drng);
    CodecTrainConfig cfg;
    cfg.eta_per = 0.7;
    cfg.eta_adv = 0.2;
    cfg.eta_code = 1.3;
    cfg.beta_commit = 0.25;
    cfg.discriminator_warmup_steps = 10;
    nn::Tape t2;
    auto nodes = build_codec_loss(t2, model, per, disc, chw.data(), /*step=*/50, cfg);
    const double expect = t2[nodes.rec].v[0] + cfg.eta_per * t2[nodes.per].v[0] +
                          cfg.eta_adv * t2[nodes.adv].v[0] + cfg.eta_code * t2[nodes.code].v[0];
    CHECK(std::abs(t2[nodes.total].v[0] - expect) < 1e-6);
}

TEST_CASE("adversarial term is gated until the discriminator warmup") {
    Rng rng(9);
    CodecModel model(tiny_config(), rng);
    PerceptualNet per(3, 42);
    auto map = smooth_map(32, 4);
    auto chw = hwc_to_chw(map, 32, 32, 3);
    CodecTrainConfig cfg;
    cfg.discriminator_warmup_steps = 100;

    Rng d1(123), d2(456);
    Discriminator disc_a(model.cfg, d1);
    Discriminator disc_b(model.cfg, d2);

    nn::Tape ta, tb;
    auto na = build_codec_loss(ta, model, per, disc_a, chw.data(), 99, cfg);
    auto nb = build_codec_loss(tb, model, per, disc_b, chw.data(), 99, cfg);
    CHECK(ta[na.adv].v[0] == 0.0f);
    CHECK(ta[na.total].v[0] == tb[nb.total].v[0]);  // independent of the discriminator

    nn::Tape tc, td;
    auto nc = build_codec_loss(tc, model, per, disc_a, chw.data(), 100, cfg);
    auto nd = build_codec_loss(td, model, per, disc_b, chw.data(), 100, cfg);
    CHECK(tc[nc.adv].v[0] != td[nd.adv].v[0]);  // now the discriminator matters
}

TEST_CASE("overfitting one map reconstructs it closely") {
    Rng rng(11);
    CodecModelConfig mc = tiny_config();
    CodecModel model(mc, rng);
    auto chw = hwc_to_chw(smooth_map(32, 9), 32, 32, 3);

    CodecTrainConfig cfg;
    cfg.steps = 350;
    cfg.batch = 2;
    cfg.lr = 2e-3;
    cfg.eta_per = 0.3;
    cfg.eta_adv = 0.0;  // pure reconstruction for the overfit check
    cfg.discriminator_warmup_steps = 1000000;
    cfg.seed = 3;
    cfg.threads = 2;
    train_codec(model, {chw}, cfg, nullptr);

    LatentGrid z = codec_encode(model, chw);
    auto rec = codec_decode(model, quantize(z, model.codebook_view()));
    double l1 = 0;
    for (size_t i = 0; i < rec.size(); ++i) l1 += std::abs(rec[i] - chw[i]);
    l1 /= static_cast<double>(rec.size());
    CHECK(l1 < 0.08);
}

TEST_CASE("training reduces reconstruction loss and is seed-deterministic") {
    auto make_maps = [] {
        std::vector<std::vector<float>> maps;
        for (int i = 0; i < 8; ++i) maps.push_back(hwc_to_chw(smooth_map(32, 100 + i), 32, 32, 3));
        return maps;
    };
    auto run = [&](uint64_t seed) {
        Rng rng(77);  // model init fixed; data order from cfg.seed
        CodecModel model(tiny_config(), rng);
        CodecTrainConfig cfg;
        cfg.steps = 120;
        cfg.batch = 2;
        cfg.lr = 1.5e-3;
        cfg.eta_adv = 0.0;
        cfg.discriminator_warmup_steps = 1000000;
        cfg.seed = seed;
        cfg.threads = 2;
        auto maps = make_maps();
        auto stats = train_codec(model, maps, cfg, nullptr);
        return std::make_pair(stats, model.codebook_param.w);
    };
    auto [stats1, cb1] = run(5);
    auto [stats2, cb2] = run(5);
    CHECK(stats1.last_rec < stats1.first_rec);
    CHECK(cb1 == cb2);  // bit-identical across runs

    auto [stats3, cb3] = run(6);
    CHECK(cb1 != cb3);  // different data order actually changes the outcome
}

TEST_CASE("checkpoints round-trip weights and metadata") {
    Rng rng(13);
    CodecModel model(tiny_config(), rng);
    const auto path =
        (std::filesystem::temp_directory_path() / "talkie_codec_test.ckpt").string();
    save_codec_checkpoint(path, model, "motion", 8.25, 321, "cfghash");
    auto loaded = load_codec_checkpoint(path);
    CHECK(loaded.stream == "motion");
    CHECK(loaded.norm_scale == 8.25);
    CHECK(loaded.step == 321);
    CHECK(loaded.config_hash == "cfghash");
    CHECK(loaded.model.codebook_param.w == model.codebook_param.w);

    auto chw = hwc_to_chw(smooth_map(32, 21), 32, 32, 3);
    CHECK(codec_encode(loaded.model, chw).values == codec_encode(model, chw).values);
    std::filesystem::remove(path);
}

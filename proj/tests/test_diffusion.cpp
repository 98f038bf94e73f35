#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "core/error.h"
#include "core/rng.h"
#include "diffusion/denoiser.h"
#include "diffusion/ldm.h"
#include "diffusion/sampler.h"
#include "doctest.h"
#include "nn/ops.h"

using namespace talkie;
using namespace talkie::diffusion;

TEST_CASE("schedules start at one and decrease strictly") {
    for (auto kind : {ScheduleKind::cosine, ScheduleKind::linear}) {
        auto s = make_schedule(500, kind);
        CHECK(s.alphas_bar[0] == 1.0);
        for (int i = 1; i <= 500; ++i) CHECK(s.alphas_bar[i] < s.alphas_bar[i - 1]);
        CHECK(s.alphas_bar[500] < 0.05);
    }
    CHECK_THROWS_AS(make_schedule(0, ScheduleKind::cosine), Error);
}

TEST_CASE("linear schedule matches the hand-computed running product") {
    auto s = make_schedule(4, ScheduleKind::linear, 0.2, 0.8);
    // betas: 0.2, 0.4, 0.6, 0.8
    CHECK(s.alphas_bar[1] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(s.alphas_bar[2] == doctest::Approx(0.8 * 0.6).epsilon(1e-12));
    CHECK(s.alphas_bar[3] == doctest::Approx(0.8 * 0.6 * 0.4).epsilon(1e-12));
    CHECK(s.alphas_bar[4] == doctest::Approx(0.8 * 0.6 * 0.4 * 0.2).epsilon(1e-12));
}

TEST_CASE("q_sample boundary cases") {
    auto s = make_schedule(50, ScheduleKind::cosine);
    Rng rng(1);
    std::vector<float> x0(64), noise(64), zero(64, 0.0f);
    for (auto& v : x0) v = static_cast<float>(rng.gaussian());
    for (auto& v : noise) v = static_cast<float>(rng.gaussian());

    CHECK(q_sample(x0, 0, noise, s) == x0);  // n = 0 is exact

    auto xn = q_sample(x0, 25, zero, s);
    const float sa = static_cast<float>(std::sqrt(s.alpha_bar(25)));
    for (size_t i = 0; i < x0.size(); ++i) CHECK(xn[i] == doctest::Approx(sa * x0[i]).epsilon(1e-6));

    std::vector<float> short_noise(10);
    CHECK_THROWS_AS(q_sample(x0, 5, short_noise, s), Error);
}

TEST_CASE("q_sample preserves standard-normal moments (monte carlo)") {
    auto s = make_schedule(50, ScheduleKind::cosine);
    Rng rng(20240818);
    for (int64_t n : {int64_t{1}, int64_t{25}, int64_t{50}}) {
        double sum = 0, sumsq = 0;
        const int draws = 10000;
        std::vector<float> x0(1), noise(1);
        for (int i = 0; i < draws; ++i) {
            x0[0] = static_cast<float>(rng.gaussian());
            noise[0] = static_cast<float>(rng.gaussian());
            const double v = q_sample(x0, n, noise, s)[0];
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / draws;
        const double var = sumsq / draws - mean * mean;
        CHECK(std::abs(mean) < 0.02);
        CHECK(std::abs(var - 1.0) < 0.02);
    }
}

namespace {

DenoiserConfig small_cfg() {
    DenoiserConfig cfg;
    cfg.token_dim = 6;
    cfg.audio_dim = 4;
    cfg.model_dim = 16;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.t_win = 5;
    cfg.t_prev = 2;
    return cfg;
}

std::vector<float> randvec(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.gaussian());
    return v;
}

}  // namespace

TEST_CASE("alignment mask is the identity pattern over frame indices") {
    const int t_prev = 2, t_cur = 3;
    auto mask = build_alignment_mask(t_prev, t_cur);
    const int frames = t_prev + t_cur;
    REQUIRE(mask.size() == static_cast<size_t>(1 + frames) * frames);
    const float ninf = -std::numeric_limits<float>::infinity();
    for (int j = 0; j < frames; ++j) CHECK(mask[j] == ninf);  // timestep token row
    for (int i = 0; i < frames; ++i)
        for (int j = 0; j < frames; ++j) {
            const float v = mask[static_cast<size_t>(1 + i) * frames + j];
            if (i == j)
                CHECK(v == 0.0f);
            else
                CHECK(v == ninf);
        }
}

TEST_CASE("denoiser output shape and determinism") {
    Rng rng(3);
    Denoiser model(small_cfg(), rng);
    const auto x_cur = randvec(3 * 6, 10);
    const auto x_prev = randvec(2 * 6, 11);
    const auto audio = randvec((2 + 3) * 4, 12);

    nn::Tape t1;
    const int p1 = model.forward(t1, x_cur.data(), 3, x_prev.data(), audio.data(), 7);
    CHECK(t1[p1].shape == nn::Shape{5, 6});

    nn::Tape t2;
    const int p2 = model.forward(t2, x_cur.data(), 3, x_prev.data(), audio.data(), 7);
    const auto n = nn::numel(t1[p1].shape);
    for (int64_t i = 0; i < n; ++i) CHECK(t1[p1].v[i] == t2[p2].v[i]);

    // start features replace missing context and change the prediction
    nn::Tape t3;
    const int p3 = model.forward(t3, x_cur.data(), 3, nullptr, audio.data(), 7);
    CHECK(t3[p3].shape == nn::Shape{5, 6});
    bool differs = false;
    for (int64_t i = 0; i < n; ++i)
        if (t3[p3].v[i] != t1[p1].v[i]) differs = true;
    CHECK(differs);
}

TEST_CASE("window loss with stub denoisers") {
    auto sch = make_schedule(10, ScheduleKind::cosine);
    const int t_prev = 1;

    WindowSample w;
    w.t_cur = 1;
    w.x_cur = {3.0f, -1.0f};
    w.x_prev = {0.5f, 2.0f};
    w.audio = {0, 0, 0, 0};  // 2 frames x 2 dims, unused by stubs

    // stub that returns the ground truth -> loss 0
    DenoiseFn perfect = [&](nn::Tape& t, const float*, int, const float*, const float*, int64_t) {
        std::vector<float> full = {0.5f, 2.0f, 3.0f, -1.0f};
        return nn::constant(t, {2, 2}, full.data());
    };
    nn::Tape t1;
    std::vector<float> noise = {0.3f, -0.7f};
    CHECK(t1[build_window_loss(t1, w, 5, noise, sch, t_prev, perfect)].v[0] == 0.0f);

    // stub returning X0 + 1 elementwise -> loss exactly 1
    DenoiseFn off_by_one = [&](nn::Tape& t, const float*, int, const float*, const float*, int64_t) {
        std::vector<float> full = {1.5f, 3.0f, 4.0f, 0.0f};
        return nn::constant(t, {2, 2}, full.data());
    };
    nn::Tape t2;
    CHECK(t2[build_window_loss(t2, w, 5, noise, sch, t_prev, off_by_one)].v[0] == 1.0f);

    // hand case: 2 frames, token dim 2, known prediction
    DenoiseFn stub = [&](nn::Tape& t, const float*, int, const float*, const float*, int64_t) {
        std::vector<float> full = {1.0f, 1.0f, 2.0f, 0.0f};
        return nn::constant(t, {2, 2}, full.data());
    };
    nn::Tape t3;
    const float expect = ((1.0f - 0.5f) * (1.0f - 0.5f) + (1.0f - 2.0f) * (1.0f - 2.0f) +
                          (2.0f - 3.0f) * (2.0f - 3.0f) + (0.0f - -1.0f) * (0.0f - -1.0f)) /
                         4.0f;
    CHECK(t3[build_window_loss(t3, w, 5, noise, sch, t_prev, stub)].v[0] ==
          doctest::Approx(expect).epsilon(1e-7));

    // first windows (no context) score current frames only
    WindowSample first = w;
    first.x_prev.clear();
    DenoiseFn cur_only = [&](nn::Tape& t, const float*, int, const float* x_prev, const float*,
                             int64_t) {
        CHECK(x_prev == nullptr);
        std::vector<float> full = {9.0f, 9.0f, 3.0f, -1.0f};  // context rows ignored
        return nn::constant(t, {2, 2}, full.data());
    };
    nn::Tape t4;
    CHECK(t4[build_window_loss(t4, first, 5, noise, sch, t_prev, cur_only)].v[0] == 0.0f);

    // batch-level draw helper runs
    Rng rng(5);
    const double l = ldm_loss({w, first}, sch, t_prev, perfect, rng);
    CHECK(l == 0.0);
}

TEST_CASE("ldm training on a predictable toy problem reduces the loss") {
    // target latent offsets follow the audio exactly: x[t] = audio pattern
    DenoiserConfig cfg = small_cfg();
    Rng rng(6);
    Denoiser model(cfg, rng);
    auto sch = make_schedule(8, ScheduleKind::cosine);

    LatentSequence seq;
    seq.identity = "id0";
    seq.frames = 40;
    seq.token_dim = cfg.token_dim;
    seq.offsets.resize(40 * cfg.token_dim);
    std::vector<float> audio(40 * cfg.audio_dim);
    Rng r2(7);
    for (int64_t t = 0; t < 40; ++t) {
        const float a = static_cast<float>(std::sin(0.4 * t));
        for (int k = 0; k < cfg.audio_dim; ++k) audio[t * cfg.audio_dim + k] = a * (k + 1);
        for (int k = 0; k < cfg.token_dim; ++k) seq.offsets[t * cfg.token_dim + k] = a;
    }

    LdmTrainConfig tc;
    tc.steps = 220;
    tc.batch = 4;
    tc.lr = 2e-3;
    tc.seed = 9;
    tc.threads = 2;
    tc.min_window = 2;
    auto stats = train_ldm(model, sch, {seq}, {audio}, tc, nullptr);
    CHECK(stats.smoothed_loss < stats.first_loss);
}

TEST_CASE("sampler window arithmetic and length contract") {
    CHECK(window_count(37, 16) == 3);
    CHECK(window_count(16, 16) == 1);
    CHECK(window_count(3, 16) == 1);
    CHECK(window_count(17, 16) == 2);

    DenoiserConfig cfg = small_cfg();  // t_win 5, t_prev 2
    Rng rng(8);
    Denoiser model(cfg, rng);
    auto sch = make_schedule(6, ScheduleKind::cosine);
    const int64_t T = 13;
    auto audio = randvec(T * cfg.audio_dim, 21);

    SamplerConfig sc;
    sc.seed = 4;
    auto out1 = sample_offsets(model, sch, audio, T, sc);
    CHECK(static_cast<int64_t>(out1.size()) == T * cfg.token_dim);

    auto out2 = sample_offsets(model, sch, audio, T, sc);
    CHECK(out1 == out2);  // same seed -> bit-identical

    sc.seed = 5;
    auto out3 = sample_offsets(model, sch, audio, T, sc);
    CHECK(out1 != out3);

    sc.mode = "ddim";
    sc.ddim_steps = 3;
    auto out4 = sample_offsets(model, sch, audio, T, sc);
    auto out5 = sample_offsets(model, sch, audio, T, sc);
    CHECK(out4 == out5);
}

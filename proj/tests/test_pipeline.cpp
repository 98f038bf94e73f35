// End-to-end smoke of the command layer on a minimal configuration: corpus ->
// codecs -> denoiser -> pivots -> generate -> evaluate, plus the refusal
// paths for mismatched artifacts.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>

#include "audio/wav.h"
#include "core/config.h"
#include "core/error.h"
#include "core/narray.h"
#include "doctest.h"
#include "pipeline/commands.h"

using namespace talkie;
namespace fs = std::filesystem;

namespace {

const char* kTinyOverrides = R"({
  "seed": 21,
  "dataset": {"identities": 4, "seconds_per_identity": 6.0,
              "sequences_per_identity": 2, "resolution": 32},
  "codec": {"channels": [8, 12, 16, 24], "latent_dim": 6, "codebook_size": 32,
            "steps": 260, "batch": 2, "lr": 0.002},
  "ldm": {"model_dim": 48, "layers": 1, "heads": 2, "t_win": 8, "t_prev": 2,
          "diffusion_steps": 8, "steps": 240, "batch": 4, "min_window": 2}
})";

Config tiny_config(const nlohmann::json& args) {
    Config cfg = pipeline::default_config();
    cfg.merge(nlohmann::json::parse(kTinyOverrides));
    cfg.merge({{"args", args}});
    return cfg;
}

struct TempTree {
    fs::path root;
    explicit TempTree(const std::string& name) : root(fs::temp_directory_path() / name) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~TempTree() { fs::remove_all(root); }
    std::string p(const std::string& rel) const { return (root / rel).string(); }
};

}  // namespace

TEST_CASE("minimal pipeline end to end") {
    TempTree t("talkie_pipeline_smoke");

    pipeline::run_synth_data(tiny_config({}), t.p("corpus"));
    REQUIRE(fs::exists(t.p("corpus/manifest.json")));

    pipeline::run_train_codec(tiny_config({{"dataset", t.p("corpus")}, {"stream", "motion"}}),
                              t.p("codec_m"));
    pipeline::run_train_codec(tiny_config({{"dataset", t.p("corpus")}, {"stream", "wrinkle"}}),
                              t.p("codec_w"));
    const std::string mc = t.p("codec_m/codec_motion.ckpt");
    const std::string wc = t.p("codec_w/codec_wrinkle.ckpt");
    REQUIRE(fs::exists(mc));
    REQUIRE(fs::exists(wc));

    pipeline::run_train_ldm(tiny_config({{"dataset", t.p("corpus")},
                                         {"motion_codec", mc},
                                         {"wrinkle_codec", wc}}),
                            t.p("ldm"));
    const std::string ldm = t.p("ldm/ldm.ckpt");
    REQUIRE(fs::exists(ldm));

    for (const char* stream : {"motion", "wrinkle"})
        pipeline::run_compute_pivot(tiny_config({{"dataset", t.p("corpus")},
                                                 {"codec", stream == std::string("motion") ? mc : wc},
                                                 {"stream", stream},
                                                 {"identity", "id0"}}),
                                    t.p("pivots"));

    // generate from a held-out script of a seen identity
    const std::string wav = t.p("corpus/seq_0_1/audio.wav");
    pipeline::run_generate(tiny_config({{"audio", wav},
                                        {"ldm", ldm},
                                        {"motion_codec", mc},
                                        {"wrinkle_codec", wc},
                                        {"motion_pivot", t.p("pivots/pivot_motion_id0")},
                                        {"wrinkle_pivot", t.p("pivots/pivot_wrinkle_id0")},
                                        {"topology", t.p("corpus/topology.tt4d")}}),
                           t.p("gen"));

    // frame count contract: ceil(audio_seconds * fps)
    const auto clip = audio::load_wav(wav);
    const auto motion = load_array(t.p("gen/motion"));
    const auto expected =
        static_cast<int64_t>(std::ceil(clip.seconds() * 25.0));
    // the feature clock quantizes duration to the hop grid
    CHECK(std::abs(motion.shape[0] - expected) <= 1);
    CHECK(motion.shape[2] == 3);
    const auto wrinkle = load_array(t.p("gen/wrinkle"));
    CHECK(wrinkle.shape[0] == motion.shape[0]);
    CHECK(wrinkle.shape[1] == 32);
    for (float v : wrinkle.data) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }

    // evaluate the generation against the oracle
    fs::create_directories(t.p("pred/seq_0_1"));
    for (const char* f : {"motion.f32", "motion.json", "wrinkle.f32", "wrinkle.json"})
        fs::copy_file(t.p("gen/") + f, t.p("pred/seq_0_1/") + f);
    pipeline::run_evaluate(tiny_config({{"pred", t.p("pred")},
                                        {"ref", t.p("corpus")},
                                        {"topology", t.p("corpus/topology.tt4d")}}),
                           t.p("eval"));
    std::ifstream rep(t.p("eval/report.json"));
    nlohmann::json report;
    rep >> report;
    CHECK(report["sequences"].size() == 1);
    CHECK(report["aggregate"]["lve_mm"].get<double>() >= 0.0);
    CHECK(report.contains("input_hashes"));

    // a tampered codec checkpoint is refused by hash
    const std::string mc2 = t.p("codec_m/tampered.ckpt");
    fs::copy_file(mc, mc2);
    {
        std::fstream f(mc2, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-4, std::ios::end);
        const float junk = 12345.0f;
        f.write(reinterpret_cast<const char*>(&junk), 4);
    }
    CHECK_THROWS_AS(
        pipeline::run_generate(tiny_config({{"audio", wav},
                                            {"ldm", ldm},
                                            {"motion_codec", mc2},
                                            {"wrinkle_codec", wc},
                                            {"motion_pivot", t.p("pivots/pivot_motion_id0")},
                                            {"wrinkle_pivot", t.p("pivots/pivot_wrinkle_id0")},
                                            {"topology", t.p("corpus/topology.tt4d")}}),
                               t.p("gen_bad")),
        Error);

    // a pivot from a different codec is refused as well
    pipeline::run_compute_pivot(tiny_config({{"dataset", t.p("corpus")},
                                             {"codec", mc2},
                                             {"stream", "motion"},
                                             {"identity", "id0"}}),
                                t.p("pivots_bad"));
    CHECK_THROWS_AS(
        pipeline::run_generate(tiny_config({{"audio", wav},
                                            {"ldm", ldm},
                                            {"motion_codec", mc},
                                            {"wrinkle_codec", wc},
                                            {"motion_pivot", t.p("pivots_bad/pivot_motion_id0")},
                                            {"wrinkle_pivot", t.p("pivots/pivot_wrinkle_id0")},
                                            {"topology", t.p("corpus/topology.tt4d")}}),
                               t.p("gen_bad2")),
        Error);

    // missing pivot file is a data error
    CHECK_THROWS_AS(
        pipeline::run_generate(tiny_config({{"audio", wav},
                                            {"ldm", ldm},
                                            {"motion_codec", mc},
                                            {"wrinkle_codec", wc},
                                            {"motion_pivot", t.p("pivots/nope")},
                                            {"wrinkle_pivot", t.p("pivots/pivot_wrinkle_id0")},
                                            {"topology", t.p("corpus/topology.tt4d")}}),
                               t.p("gen_bad3")),
        Error);
}

// CLI over the talkie shared library. Every subcommand forwards its flags as
// a JSON argument object to talkie_run; exit codes come straight from the
// library status.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "talkie/talkie.h"

namespace {

struct CommonOpts {
    std::string out;
    std::string config_file;
    std::vector<std::string> sets;
    long long seed = -1;
    int threads = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--out", o.out, "output directory (all artifacts land here)")->required();
    cmd->add_option("--config", o.config_file, "JSON config file merged over built-in defaults");
    cmd->add_option("--set", o.sets,
                    "config override key.path=value (JSON literals; repeatable)");
    cmd->add_option("--seed", o.seed, "seed override");
    cmd->add_option("--threads", o.threads, "worker thread count");
}

int run(const std::string& command, const CommonOpts& common, const nlohmann::json& args) {
    nlohmann::json payload = nlohmann::json::object();
    if (!common.config_file.empty()) payload["config_file"] = common.config_file;
    if (common.seed >= 0) payload["seed"] = common.seed;
    if (common.threads > 0) payload["threads"] = common.threads;
    payload["args"] = args;
    // --set overrides go through the same dotted-path syntax the config uses
    for (const std::string& s : common.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "{\"code\":2,\"kind\":\"usage\",\"message\":\"bad --set %s\"}\n",
                         s.c_str());
            return 2;
        }
        nlohmann::json* node = &payload;
        std::string key = s.substr(0, eq);
        size_t pos = 0;
        while (true) {
            const size_t dot = key.find('.', pos);
            const std::string part = key.substr(pos, dot - pos);
            if (dot == std::string::npos) {
                nlohmann::json v;
                try {
                    v = nlohmann::json::parse(s.substr(eq + 1));
                } catch (...) {
                    v = s.substr(eq + 1);
                }
                (*node)[part] = v;
                break;
            }
            node = &((*node)[part]);
            pos = dot + 1;
        }
    }

    talkie_ctx* ctx = talkie_ctx_new();
    const talkie_status st = talkie_run(ctx, command.c_str(), payload.dump().c_str(),
                                        common.out.c_str());
    if (st != TALKIE_OK) std::fprintf(stderr, "%s\n", talkie_last_error(ctx));
    talkie_ctx_free(ctx);
    return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"speech-driven facial motion + wrinkle map pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(talkie_version()));

    int rc = 0;

    CommonOpts synth_o;
    auto* synth = app.add_subcommand("synth-data", "generate the synthetic oracle corpus");
    add_common(synth, synth_o);
    synth->callback([&] { rc = run("synth-data", synth_o, nlohmann::json::object()); });

    CommonOpts tc_o;
    std::string tc_dataset, tc_stream;
    auto* tcodec = app.add_subcommand("train-codec", "train one quantized map autoencoder");
    add_common(tcodec, tc_o);
    tcodec->add_option("--dataset", tc_dataset, "corpus directory (manifest.json)")->required();
    tcodec->add_option("--stream", tc_stream, "motion | wrinkle")->required();
    tcodec->callback(
        [&] { rc = run("train-codec", tc_o, {{"dataset", tc_dataset}, {"stream", tc_stream}}); });

    CommonOpts tl_o;
    std::string tl_dataset, tl_mc, tl_wc;
    auto* tldm = app.add_subcommand("train-ldm", "train the windowed motion-wrinkle denoiser");
    add_common(tldm, tl_o);
    tldm->add_option("--dataset", tl_dataset)->required();
    tldm->add_option("--motion-codec", tl_mc, "motion codec checkpoint")->required();
    tldm->add_option("--wrinkle-codec", tl_wc, "wrinkle codec checkpoint")->required();
    tldm->callback([&] {
        rc = run("train-ldm", tl_o,
                 {{"dataset", tl_dataset}, {"motion_codec", tl_mc}, {"wrinkle_codec", tl_wc}});
    });

    CommonOpts cp_o;
    std::string cp_dataset, cp_codec, cp_stream, cp_identity, cp_split = "train";
    auto* cpivot = app.add_subcommand("compute-pivot", "time-average an identity's latents");
    add_common(cpivot, cp_o);
    cpivot->add_option("--dataset", cp_dataset)->required();
    cpivot->add_option("--codec", cp_codec, "codec checkpoint for this stream")->required();
    cpivot->add_option("--stream", cp_stream, "motion | wrinkle")->required();
    cpivot->add_option("--identity", cp_identity)->required();
    cpivot->add_option("--split", cp_split, "corpus split (default train)");
    cpivot->callback([&] {
        rc = run("compute-pivot", cp_o,
                 {{"dataset", cp_dataset},
                  {"codec", cp_codec},
                  {"stream", cp_stream},
                  {"identity", cp_identity},
                  {"split", cp_split}});
    });

    CommonOpts g_o;
    std::string g_audio, g_feats, g_ldm, g_mc, g_wc, g_mp, g_wp, g_topo, g_neutral;
    long long g_frames = 0;
    auto* gen = app.add_subcommand("generate", "synthesize motion + wrinkles from speech");
    add_common(gen, g_o);
    gen->add_option("--audio", g_audio, "16 kHz mono WAV");
    gen->add_option("--audio-features", g_feats, "pre-extracted feature dump (f32+json)");
    gen->add_option("--ldm", g_ldm, "LDM checkpoint")->required();
    gen->add_option("--motion-codec", g_mc)->required();
    gen->add_option("--wrinkle-codec", g_wc)->required();
    gen->add_option("--motion-pivot", g_mp)->required();
    gen->add_option("--wrinkle-pivot", g_wp)->required();
    gen->add_option("--topology", g_topo, "TT4D-TOPO file")->required();
    gen->add_option("--neutral", g_neutral, "neutral texture array; also emits textures");
    gen->add_option("--frames", g_frames, "override the frame count");
    gen->callback([&] {
        nlohmann::json args = {{"ldm", g_ldm},          {"motion_codec", g_mc},
                               {"wrinkle_codec", g_wc}, {"motion_pivot", g_mp},
                               {"wrinkle_pivot", g_wp}, {"topology", g_topo}};
        if (!g_audio.empty()) args["audio"] = g_audio;
        if (!g_feats.empty()) args["audio_features"] = g_feats;
        if (!g_neutral.empty()) args["neutral"] = g_neutral;
        if (g_frames > 0) args["frames"] = g_frames;
        rc = run("generate", g_o, args);
    });

    CommonOpts e_o;
    std::string e_pred, e_ref, e_topo;
    auto* eval = app.add_subcommand("evaluate", "motion/texture metrics against a reference");
    add_common(eval, e_o);
    eval->add_option("--pred", e_pred, "directory with predicted sequences")->required();
    eval->add_option("--ref", e_ref, "directory with reference sequences")->required();
    eval->add_option("--topology", e_topo)->required();
    eval->callback([&] {
        rc = run("evaluate", e_o, {{"pred", e_pred}, {"ref", e_ref}, {"topology", e_topo}});
    });

    CommonOpts d_o;
    std::string d_input;
    auto* dyn = app.add_subcommand("dynamics", "temporal dynamics field of a sequence array");
    add_common(dyn, d_o);
    dyn->add_option("--input", d_input, "named array ([T,V,3] or [T,H,W,C])")->required();
    dyn->callback([&] { rc = run("dynamics", d_o, {{"input", d_input}}); });

    CLI11_PARSE(app, argc, argv);
    return rc;
}

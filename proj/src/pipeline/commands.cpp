#include "pipeline/commands.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "appearance/wrinkle.h"
#include "core/error.h"
#include "core/hash.h"
#include "core/log.h"
#include "core/narray.h"
#include "core/rng.h"
#include "diffusion/sampler.h"
#include "metrics/metrics.h"
#include "pipeline/dataset.h"

namespace fs = std::filesystem;

namespace talkie::pipeline {

Config default_config() {
    return Config::from_json_text(R"({
      "seed": 7,
      "threads": 2,
      "dataset": {
        "identities": 6, "seconds_per_identity": 30.0, "fps": 25.0,
        "resolution": 64, "sequences_per_identity": 5, "sample_rate": 16000
      },
      "codec": {
        "latent_dim": 8, "codebook_size": 128, "channels": [12, 16, 24, 32, 48],
        "steps": 5000, "batch": 4, "lr": 0.001,
        "eta_per": 1.0, "eta_adv": 0.2, "eta_code": 1.0, "beta_commit": 0.25,
        "disc_warmup": 40000, "disc_lr": 0.001, "perceptual_seed": 99, "log_every": 100
      },
      "audio": { "backend": "logmel", "bands": 80, "window_ms": 25.0,
                 "hop_ms": 10.0, "sample_rate": 16000 },
      "ldm": {
        "model_dim": 128, "layers": 2, "heads": 4, "ffn_mult": 4,
        "t_win": 16, "t_prev": 4, "diffusion_steps": 50, "schedule": "cosine",
        "steps": 12000, "batch": 8, "lr": 0.0003, "grad_clip": 1.0,
        "min_window": 4, "log_every": 100
      },
      "sampler": { "mode": "ddpm", "ddim_steps": 25 },
      "metrics": { "psnr_cap_db": 99.0 }
    })");
}

namespace {

struct RunContext {
    std::string out;
    Log log;
    std::string config_hash;
};

RunContext open_run(const Config& cfg, const std::string& out, const std::string& command) {
    require_usage(!out.empty(), "missing --out directory");
    fs::create_directories(out);
    RunContext rc;
    rc.out = out;
    rc.log.open_file((fs::path(out) / "run.log").string());
    cfg.dump_to_file((fs::path(out) / "effective_config.json").string());
    rc.config_hash = cfg.hash();
    rc.log.f("%s: config hash %s", command.c_str(), rc.config_hash.c_str());
    return rc;
}

std::string arg(const Config& cfg, const std::string& key) {
    const std::string v = cfg.get<std::string>("args." + key, "");
    if (v.empty()) fail_usage("missing required argument --" + key);
    return v;
}

codec::CodecModelConfig codec_model_config(const Config& cfg, int resolution) {
    codec::CodecModelConfig mc;
    mc.resolution = resolution;
    mc.in_channels = 3;
    mc.latent_dim = cfg.get<int>("codec.latent_dim", 8);
    mc.codebook_size = cfg.get<int>("codec.codebook_size", 128);
    mc.channels = cfg.get<std::vector<int>>("codec.channels", {12, 16, 24, 32, 48});
    mc.validate();
    return mc;
}

codec::CodecTrainConfig codec_train_config(const Config& cfg) {
    codec::CodecTrainConfig tc;
    tc.eta_per = cfg.get<double>("codec.eta_per", 1.0);
    tc.eta_adv = cfg.get<double>("codec.eta_adv", 0.2);
    tc.eta_code = cfg.get<double>("codec.eta_code", 1.0);
    tc.beta_commit = cfg.get<double>("codec.beta_commit", 0.25);
    tc.discriminator_warmup_steps = cfg.get<int64_t>("codec.disc_warmup", 800);
    tc.lr = cfg.get<double>("codec.lr", 1e-3);
    tc.disc_lr = cfg.get<double>("codec.disc_lr", 1e-3);
    tc.batch = cfg.get<int>("codec.batch", 4);
    tc.steps = cfg.get<int64_t>("codec.steps", 5000);
    tc.seed = cfg.get<uint64_t>("seed", 7);
    tc.threads = cfg.get<int>("threads", 2);
    tc.log_every = cfg.get<int64_t>("codec.log_every", 100);
    tc.perceptual_seed = cfg.get<uint64_t>("codec.perceptual_seed", 99);
    return tc;
}

diffusion::DenoiserConfig denoiser_config(const Config& cfg, int token_dim) {
    diffusion::DenoiserConfig dc;
    dc.token_dim = token_dim;
    dc.audio_dim = cfg.get<int>("audio.bands", 80);
    dc.model_dim = cfg.get<int>("ldm.model_dim", 128);
    dc.layers = cfg.get<int>("ldm.layers", 2);
    dc.heads = cfg.get<int>("ldm.heads", 4);
    dc.ffn_mult = cfg.get<int>("ldm.ffn_mult", 4);
    dc.t_win = cfg.get<int>("ldm.t_win", 16);
    dc.t_prev = cfg.get<int>("ldm.t_prev", 4);
    dc.validate();
    return dc;
}

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail_data("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace

void run_synth_data(const Config& cfg, const std::string& out) {
    RunContext rc = open_run(cfg, out, "synth-data");
    synthdata::CorpusConfig cc;
    cc.identities = cfg.get<int>("dataset.identities", 6);
    cc.seconds_per_identity = cfg.get<double>("dataset.seconds_per_identity", 30.0);
    cc.fps = cfg.get<double>("dataset.fps", 25.0);
    cc.resolution = cfg.get<int>("dataset.resolution", 64);
    cc.sequences_per_identity = cfg.get<int>("dataset.sequences_per_identity", 5);
    cc.sample_rate = cfg.get<int>("dataset.sample_rate", 16000);
    cc.seed = cfg.get<uint64_t>("seed", 7);
    auto manifest = synthdata::generate_corpus(cc, out, &rc.log);
    rc.log.f("synth-data: %zu sequences, motion scale %.4f", manifest.sequences.size(),
             manifest.motion_scale);
}

void run_train_codec(const Config& cfg, const std::string& out) {
    RunContext rc = open_run(cfg, out, "train-codec");
    const std::string dataset = arg(cfg, "dataset");
    const std::string stream = arg(cfg, "stream");
    require_usage(stream == "motion" || stream == "wrinkle",
                  "--stream must be motion or wrinkle");

    const auto manifest = synthdata::load_manifest(dataset);
    const auto topo = geo::load_topology(manifest.path(manifest.topology_path));
    rc.log.f("train-codec[%s]: loading train split", stream.c_str());
    const auto maps = load_split_maps(manifest, topo, "train", stream);
    rc.log.f("train-codec[%s]: %zu frames", stream.c_str(), maps.size());

    Rng init_rng = Rng(cfg.get<uint64_t>("seed", 7)).fork("codec_init_" + stream);
    codec::CodecModel model(codec_model_config(cfg, manifest.resolution), init_rng);
    codec::CodecTrainConfig tc = codec_train_config(cfg);

    Log loss_log;
    loss_log.open_file((fs::path(out) / "loss.jsonl").string());
    auto stats = codec::train_codec(model, maps, tc, &loss_log);

    const double scale = stream == "motion" ? manifest.motion_scale : 1.0;
    const std::string ckpt = (fs::path(out) / ("codec_" + stream + ".ckpt")).string();
    codec::save_codec_checkpoint(ckpt, model, stream, scale, stats.steps_run, rc.config_hash);

    const double psnr = codec::reconstruction_psnr(model, maps);
    const double util = codec::codebook_utilization(model, maps);
    nlohmann::json summary = {{"stream", stream},
                              {"steps", stats.steps_run},
                              {"first_rec", stats.first_rec},
                              {"last_rec", stats.last_rec},
                              {"smoothed_rec", stats.smoothed_rec},
                              {"train_psnr_db", psnr},
                              {"codebook_utilization", util},
                              {"checkpoint", ckpt},
                              {"dataset_hash", hash_file_hex(manifest.path("manifest.json"))}};
    write_json(summary, (fs::path(out) / "summary.json").string());
    rc.log.f("train-codec[%s]: rec %.5f -> %.5f, psnr %.2f dB, utilization %.3f", stream.c_str(),
             stats.first_rec, stats.last_rec, psnr, util);
}

void run_train_ldm(const Config& cfg, const std::string& out) {
    RunContext rc = open_run(cfg, out, "train-ldm");
    const std::string dataset = arg(cfg, "dataset");
    const auto motion_ckpt_path = arg(cfg, "motion_codec");
    const auto wrinkle_ckpt_path = arg(cfg, "wrinkle_codec");

    const auto manifest = synthdata::load_manifest(dataset);
    const auto topo = geo::load_topology(manifest.path(manifest.topology_path));
    auto motion_codec = codec::load_codec_checkpoint(motion_ckpt_path);
    auto wrinkle_codec = codec::load_codec_checkpoint(wrinkle_ckpt_path);
    require_data(motion_codec.stream == "motion", "--motion_codec is not a motion codec");
    require_data(wrinkle_codec.stream == "wrinkle", "--wrinkle_codec is not a wrinkle codec");

    rc.log.line("train-ldm: encoding train sequences through both codecs");
    const auto enc_m = encode_split(manifest, topo, motion_codec.model, motion_codec.norm_scale,
                                    "train", "motion");
    const auto enc_w = encode_split(manifest, topo, wrinkle_codec.model, 1.0, "train", "wrinkle");
    require_data(enc_m.size() == enc_w.size(), "motion/wrinkle sequence count mismatch");

    const auto pivots_m = identity_pivots(enc_m);
    const auto pivots_w = identity_pivots(enc_w);

    const int dim_m = enc_m.front().latent_dim;
    const int dim_w = enc_w.front().latent_dim;
    const int token_dim = dim_m + dim_w;

    const audio::LogMelConfig mel_cfg = mel_config_from(cfg);
    std::vector<diffusion::LatentSequence> seqs;
    std::vector<std::vector<float>> audio_aligned;
    for (size_t i = 0; i < enc_m.size(); ++i) {
        const auto& em = enc_m[i];
        const auto& ew = enc_w[i];
        require_data(em.entry->name == ew.entry->name, "sequence order mismatch across streams");
        diffusion::LatentSequence ls;
        ls.identity = em.entry->identity;
        ls.frames = em.frames;
        ls.token_dim = token_dim;
        ls.offsets.resize(static_cast<size_t>(em.frames) * token_dim);
        const auto& pm = pivots_m.at(ls.identity);
        const auto& pw = pivots_w.at(ls.identity);
        for (int64_t t = 0; t < em.frames; ++t) {
            float* row = ls.offsets.data() + t * token_dim;
            for (int k = 0; k < dim_m; ++k) row[k] = em.latents[t * dim_m + k] - pm[k];
            for (int k = 0; k < dim_w; ++k) row[dim_m + k] = ew.latents[t * dim_w + k] - pw[k];
        }
        seqs.push_back(std::move(ls));
        audio_aligned.push_back(aligned_audio_for(manifest, *em.entry, mel_cfg));
        rc.log.f("train-ldm: prepared %s (%lld frames)", em.entry->name.c_str(),
                 static_cast<long long>(em.frames));
    }

    Rng init_rng = Rng(cfg.get<uint64_t>("seed", 7)).fork("ldm_init");
    diffusion::Denoiser model(denoiser_config(cfg, token_dim), init_rng);
    const auto schedule = diffusion::make_schedule(
        cfg.get<int64_t>("ldm.diffusion_steps", 50),
        diffusion::schedule_kind_from_string(cfg.get<std::string>("ldm.schedule", "cosine")));

    diffusion::LdmTrainConfig tc;
    tc.steps = cfg.get<int64_t>("ldm.steps", 12000);
    tc.batch = cfg.get<int>("ldm.batch", 8);
    tc.lr = cfg.get<double>("ldm.lr", 3e-4);
    tc.grad_clip = cfg.get<double>("ldm.grad_clip", 1.0);
    tc.seed = cfg.get<uint64_t>("seed", 7);
    tc.threads = cfg.get<int>("threads", 2);
    tc.min_window = cfg.get<int>("ldm.min_window", 4);
    tc.log_every = cfg.get<int64_t>("ldm.log_every", 100);

    Log loss_log;
    loss_log.open_file((fs::path(out) / "loss.jsonl").string());
    auto stats = diffusion::train_ldm(model, schedule, seqs, audio_aligned, tc, &loss_log);

    diffusion::LdmCheckpointMeta meta;
    meta.motion_codec_hash = hash_file_hex(motion_ckpt_path);
    meta.wrinkle_codec_hash = hash_file_hex(wrinkle_ckpt_path);
    meta.fps = manifest.fps;
    meta.motion_latent_dim = dim_m;
    meta.wrinkle_latent_dim = dim_w;
    const std::string ckpt = (fs::path(out) / "ldm.ckpt").string();
    diffusion::save_ldm_checkpoint(ckpt, model, schedule, meta, stats.steps_run, rc.config_hash);

    write_json({{"steps", stats.steps_run},
                {"first_loss", stats.first_loss},
                {"last_loss", stats.last_loss},
                {"smoothed_loss", stats.smoothed_loss},
                {"checkpoint", ckpt}},
               (fs::path(out) / "summary.json").string());
    rc.log.f("train-ldm: loss %.5f -> %.5f", stats.first_loss, stats.smoothed_loss);
}

void run_compute_pivot(const Config& cfg, const std::string& out) {
    RunContext rc = open_run(cfg, out, "compute-pivot");
    const std::string dataset = arg(cfg, "dataset");
    const std::string codec_path = arg(cfg, "codec");
    const std::string stream = arg(cfg, "stream");
    const std::string identity = arg(cfg, "identity");
    const std::string split = cfg.get<std::string>("args.split", "train");

    const auto manifest = synthdata::load_manifest(dataset);
    const auto topo = geo::load_topology(manifest.path(manifest.topology_path));
    auto loaded = codec::load_codec_checkpoint(codec_path);
    require_data(loaded.stream == stream,
                 "codec stream '" + loaded.stream + "' does not match --stream " + stream);

    const auto enc = encode_split(manifest, topo, loaded.model, loaded.norm_scale, split, stream);
    std::vector<float> latents;
    int64_t frames = 0;
    int lat_dim = 0;
    for (const auto& s : enc) {
        if (s.entry->identity != identity) continue;
        latents.insert(latents.end(), s.latents.begin(), s.latents.end());
        frames += s.frames;
        lat_dim = s.latent_dim;
    }
    require_data(frames > 0, "identity " + identity + " has no sequences in split " + split);

    style::StylePivot pivot = style::compute_pivot(latents, frames, lat_dim);
    pivot.stream = stream;
    pivot.identity = identity;
    pivot.codec_checkpoint_hash = hash_file_hex(codec_path);
    const std::string base = (fs::path(out) / ("pivot_" + stream + "_" + identity)).string();
    style::save_pivot(pivot, base);
    rc.log.f("compute-pivot: %s/%s over %lld frames -> %s", stream.c_str(), identity.c_str(),
             static_cast<long long>(frames), base.c_str());
}

void run_generate(const Config& cfg, const std::string& out) {
    RunContext rc = open_run(cfg, out, "generate");
    const std::string ldm_path = arg(cfg, "ldm");
    const std::string motion_ckpt_path = arg(cfg, "motion_codec");
    const std::string wrinkle_ckpt_path = arg(cfg, "wrinkle_codec");
    const std::string topo_path = arg(cfg, "topology");

    auto ldm = diffusion::load_ldm_checkpoint(ldm_path);
    // refuse mismatched codecs
    const std::string mh = hash_file_hex(motion_ckpt_path);
    const std::string wh = hash_file_hex(wrinkle_ckpt_path);
    if (mh != ldm.meta.motion_codec_hash)
        fail_data("motion codec hash " + mh + " does not match the LDM checkpoint (trained with " +
                  ldm.meta.motion_codec_hash + ")");
    if (wh != ldm.meta.wrinkle_codec_hash)
        fail_data("wrinkle codec hash " + wh + " does not match the LDM checkpoint (trained with " +
                  ldm.meta.wrinkle_codec_hash + ")");

    auto motion_codec = codec::load_codec_checkpoint(motion_ckpt_path);
    auto wrinkle_codec = codec::load_codec_checkpoint(wrinkle_ckpt_path);
    const auto topo = geo::load_topology(topo_path);

    auto motion_pivot = style::load_pivot(arg(cfg, "motion_pivot"));
    auto wrinkle_pivot = style::load_pivot(arg(cfg, "wrinkle_pivot"));
    if (!motion_pivot.codec_checkpoint_hash.empty() && motion_pivot.codec_checkpoint_hash != mh)
        fail_data("motion pivot was computed with a different codec checkpoint");
    if (!wrinkle_pivot.codec_checkpoint_hash.empty() && wrinkle_pivot.codec_checkpoint_hash != wh)
        fail_data("wrinkle pivot was computed with a different codec checkpoint");

    // audio conditioning: wav through the default backend, or a feature dump
    const double fps = ldm.meta.fps > 0 ? ldm.meta.fps : cfg.get<double>("dataset.fps", 25.0);
    audio::AudioFeatureSequence features;
    std::string audio_hash;
    if (cfg.has("args.audio_features")) {
        const std::string fpath = arg(cfg, "audio_features");
        features = audio::load_feature_dump(fpath);
        std::string raw = fpath;
        if (raw.ends_with(".json")) raw = raw.substr(0, raw.size() - 5) + ".f32";
        if (!raw.ends_with(".f32")) raw += ".f32";
        audio_hash = hash_file_hex(raw);
    } else {
        const std::string wav_path = arg(cfg, "audio");
        const audio::AudioClip clip = audio::load_wav(wav_path);
        audio::LogMelExtractor mel(mel_config_from(cfg));
        features = mel.extract(clip);
        audio_hash = hash_file_hex(wav_path);
    }
    require_data(features.dim == ldm.model.cfg.audio_dim,
                 "audio feature dimension does not match the LDM");

    int64_t frames = cfg.get<int64_t>("args.frames", 0);
    if (frames <= 0) {
        const double seconds = static_cast<double>(features.frames) / features.frame_rate;
        frames = static_cast<int64_t>(std::ceil(seconds * fps));
    }
    require_usage(frames >= 1, "generate: no frames to synthesize");
    const std::vector<float> aligned = audio::align_features(features, frames);

    diffusion::SamplerConfig sc;
    sc.mode = cfg.get<std::string>("sampler.mode", "ddpm");
    sc.ddim_steps = cfg.get<int>("sampler.ddim_steps", 25);
    sc.seed = cfg.get<uint64_t>("seed", 7);

    rc.log.f("generate: %lld frames at %.1f fps (%s sampler, %lld windows)",
             static_cast<long long>(frames), fps, sc.mode.c_str(),
             static_cast<long long>(diffusion::window_count(frames, ldm.model.cfg.t_win)));
    auto gen = diffusion::sample_sequence(ldm.model, ldm.schedule, aligned, frames, motion_pivot,
                                          wrinkle_pivot, motion_codec.model,
                                          motion_codec.norm_scale, wrinkle_codec.model, topo, fps,
                                          sc);

    NamedArray motion = make_array("motion", {frames, topo.vertex_count, 3});
    motion.data = gen.motion.offsets;
    motion.extra["fps"] = fps;
    motion.extra["units"] = "mm";
    motion.extra["audio_hash"] = audio_hash;
    save_array(motion, (fs::path(out) / "motion").string());

    const int R = gen.resolution;
    NamedArray wrinkle = make_array("wrinkle", {frames, R, R, 3});
    for (int64_t t = 0; t < frames; ++t)
        std::copy(gen.wrinkle_maps[t].begin(), gen.wrinkle_maps[t].end(),
                  wrinkle.data.begin() + t * R * R * 3);
    wrinkle.extra["fps"] = fps;
    wrinkle.extra["audio_hash"] = audio_hash;
    save_array(wrinkle, (fs::path(out) / "wrinkle").string());

    if (cfg.has("args.neutral")) {
        // textured frames through the wrinkle decoder path
        NamedArray neutral_arr = load_array(cfg.get<std::string>("args.neutral", ""));
        require_data(neutral_arr.shape.size() == 3 && neutral_arr.shape[0] == R &&
                         neutral_arr.shape[1] == R && neutral_arr.shape[2] == 3,
                     "--neutral must be an [R,R,3] texture at the map resolution");
        appearance::TextureFrame neutral;
        neutral.height = neutral.width = R;
        neutral.rgb = neutral_arr.data;
        NamedArray tex = make_array("textures", {frames, R, R, 3});
        for (int64_t t = 0; t < frames; ++t) {
            appearance::WrinkleMap wm;
            wm.height = wm.width = R;
            wm.values = gen.wrinkle_maps[t];
            const auto frame = appearance::wrinkle_apply(wm, neutral);
            std::copy(frame.rgb.begin(), frame.rgb.end(), tex.data.begin() + t * R * R * 3);
        }
        save_array(tex, (fs::path(out) / "textures").string());
    }
    rc.log.line("generate: wrote motion, wrinkle arrays");
}

namespace {

struct EvalPair {
    std::string name;
    std::string pred_dir, ref_dir;
};

std::vector<EvalPair> find_eval_pairs(const std::string& pred, const std::string& ref) {
    std::vector<EvalPair> pairs;
    if (fs::exists(fs::path(pred) / "motion.json")) {
        pairs.push_back({fs::path(pred).filename().string(), pred, ref});
        return pairs;
    }
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(pred))
        if (e.is_directory() && fs::exists(e.path() / "motion.json"))
            names.insert(e.path().filename().string());
    for (const auto& n : names) {
        const fs::path r = fs::path(ref) / n;
        if (fs::exists(r / "motion.json")) pairs.push_back({n, (fs::path(pred) / n).string(), r.string()});
    }
    return pairs;
}

std::vector<double> to_double(const std::vector<float>& v) {
    return std::vector<double>(v.begin(), v.end());
}

}  // namespace

void run_evaluate(const Config& cfg, const std::string& out) {
    RunContext rc = open_run(cfg, out, "evaluate");
    const std::string pred = arg(cfg, "pred");
    const std::string ref = arg(cfg, "ref");
    const auto topo = geo::load_topology(arg(cfg, "topology"));
    const double cap = cfg.get<double>("metrics.psnr_cap_db", 99.0);

    const auto pairs = find_eval_pairs(pred, ref);
    require_data(!pairs.empty(), "no matching sequences between " + pred + " and " + ref);

    const auto lips = topo.lip_indices();
    const auto uppers = topo.upper_indices();

    metrics::MetricReport report;
    nlohmann::json input_hashes = nlohmann::json::object();
    for (const auto& p : pairs) {
        NamedArray pm = load_array(p.pred_dir + "/motion");
        NamedArray rm = load_array(p.ref_dir + "/motion");
        require_data(pm.shape == rm.shape, "motion shape mismatch for " + p.name);
        input_hashes[p.name] = {{"pred_motion", hash_file_hex(p.pred_dir + "/motion.f32")},
                                {"ref_motion", hash_file_hex(p.ref_dir + "/motion.f32")}};

        const auto pd = to_double(pm.data);
        const auto rd = to_double(rm.data);
        metrics::MotionView pv{pm.shape[0], pm.shape[1], pd.data()};
        metrics::MotionView rv{rm.shape[0], rm.shape[1], rd.data()};

        metrics::SequenceMetrics sm;
        sm.name = p.name;
        sm.lve_mm = metrics::lve(pv, rv, lips);
        sm.mve_mm = metrics::mve(pv, rv);
        sm.mve_max_mm = metrics::mve_max_variant(pv, rv);
        sm.fdd_mm = metrics::fdd(pv, rv, uppers);

        if (fs::exists(p.pred_dir + "/wrinkle.json") && fs::exists(p.ref_dir + "/wrinkle.json")) {
            NamedArray pw = load_array(p.pred_dir + "/wrinkle");
            NamedArray rw = load_array(p.ref_dir + "/wrinkle");
            require_data(pw.shape == rw.shape, "wrinkle shape mismatch for " + p.name);
            const int64_t T = pw.shape[0];
            const int H = static_cast<int>(pw.shape[1]), W = static_cast<int>(pw.shape[2]);
            const auto pwd = to_double(pw.data);
            const auto rwd = to_double(rw.data);
            std::vector<const double*> pf, rf;
            for (int64_t t = 0; t < T; ++t) {
                pf.push_back(pwd.data() + t * H * W * 3);
                rf.push_back(rwd.data() + t * H * W * 3);
            }
            const auto ps = metrics::psnr(pf, rf, static_cast<int64_t>(H) * W * 3, cap);
            sm.psnr_db = ps.db;
            sm.psnr_capped = ps.capped;
            sm.ssim_val = metrics::ssim(pf, rf, H, W, 3);
        }
        report.sequences.push_back(sm);
        rc.log.f("evaluate %s: lve %.4f mve %.4f fdd %.4f", p.name.c_str(), sm.lve_mm, sm.mve_mm,
                 sm.fdd_mm);
    }

    nlohmann::json j = report.to_json();
    j["tool_version"] = kToolVersion;
    j["config_hash"] = rc.config_hash;
    j["input_hashes"] = input_hashes;
    j["masks"] = {{"lip_vertices", lips.size()}, {"upper_face_vertices", uppers.size()}};
    write_json(j, (fs::path(out) / "report.json").string());
}

void run_dynamics(const Config& cfg, const std::string& out) {
    RunContext rc = open_run(cfg, out, "dynamics");
    NamedArray a = load_array(arg(cfg, "input"));
    require_data(a.shape.size() >= 3 && a.shape[0] >= 2,
                 "dynamics input must be [T,...,C] with T >= 2");
    const int64_t T = a.shape[0];
    const int channels = static_cast<int>(a.shape.back());
    int64_t elements = 1;
    for (size_t i = 1; i + 1 < a.shape.size(); ++i) elements *= a.shape[i];

    const auto data = std::vector<double>(a.data.begin(), a.data.end());
    std::vector<const double*> frames;
    for (int64_t t = 0; t < T; ++t) frames.push_back(data.data() + t * elements * channels);
    const auto field = metrics::temporal_dynamics(frames, elements, channels);

    std::vector<int64_t> shape(a.shape.begin() + 1, a.shape.end() - 1);
    NamedArray outa = make_array("dynamics", shape);
    for (size_t i = 0; i < field.size(); ++i) outa.data[i] = static_cast<float>(field[i]);
    outa.extra["source"] = a.name;
    outa.extra["frames"] = T;
    save_array(outa, (fs::path(out) / "dynamics").string());
    double mean = 0;
    for (double v : field) mean += v;
    rc.log.f("dynamics: %lld elements, mean %.6f", static_cast<long long>(field.size()),
             mean / static_cast<double>(field.size()));
}

void run_command(const std::string& name, const Config& cfg, const std::string& out) {
    if (name == "synth-data") return run_synth_data(cfg, out);
    if (name == "train-codec") return run_train_codec(cfg, out);
    if (name == "train-ldm") return run_train_ldm(cfg, out);
    if (name == "compute-pivot") return run_compute_pivot(cfg, out);
    if (name == "generate") return run_generate(cfg, out);
    if (name == "evaluate") return run_evaluate(cfg, out);
    if (name == "dynamics") return run_dynamics(cfg, out);
    fail_usage("unknown command: " + name);
}

}  // namespace talkie::pipeline

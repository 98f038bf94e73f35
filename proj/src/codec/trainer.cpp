#include "codec/trainer.h"

#include <algorithm>
#include <cmath>
#include <memory>

#include "core/archive.h"
#include "core/error.h"
#include "core/parallel.h"
#include "core/rng.h"
#include "metrics/metrics.h"
#include "nn/adam.h"

namespace talkie::codec {

using namespace talkie::nn;

void CodecTrainConfig::validate() const {
    require_usage(eta_per >= 0 && eta_adv >= 0 && eta_code >= 0 && beta_commit >= 0,
                  "codec train: loss weights must be nonnegative");
    require_usage(batch >= 1 && steps >= 1, "codec train: batch and steps must be positive");
}

int vq_code_loss(Tape& t, int z_cells, Param& codebook, const std::vector<int>& indices,
                 double beta) {
    const int cb = t.leaf(codebook);
    const int zq = gather_rows(t, cb, indices);
    const int codebook_term = mse(t, detach(t, z_cells), zq);
    const int commit_term = mse(t, z_cells, detach(t, zq));
    return add(t, codebook_term, scale(t, commit_term, beta));
}

CodecLossNodes build_codec_loss(Tape& t, const CodecModel& model, const PerceptualNet& perceptual,
                                const Discriminator& disc, const float* map_chw, int64_t step,
                                const CodecTrainConfig& cfg) {
    const int R = model.cfg.resolution;
    const int x = t.input(map_chw, {model.cfg.in_channels, R, R});

    const int z = model.encoder(t, x);
    const int cells = chw_to_rows(t, z);

    Codebook book = model.codebook_view();
    std::vector<int32_t> idx32 =
        nearest_indices(book, std::vector<float>(t[cells].v, t[cells].v + numel(t[cells].shape)));
    std::vector<int> idx(idx32.begin(), idx32.end());

    const int cb_leaf = t.leaf(const_cast<Param&>(model.codebook_param));
    const int zq = gather_rows(t, cb_leaf, idx);
    const int st = straight_through(t, cells, zq);
    const int zback = rows_to_chw(t, st, model.cfg.latent_side(), model.cfg.latent_side());
    const int recon = model.decoder(t, zback);

    CodecLossNodes nodes;
    nodes.indices = idx;
    nodes.recon = recon;
    nodes.rec = l1(t, recon, x);
    nodes.per = perceptual.distance(t, recon, x);
    {
        const int codebook_term = mse(t, detach(t, cells), zq);
        const int commit_term = mse(t, cells, detach(t, zq));
        nodes.code = add(t, codebook_term, scale(t, commit_term, cfg.beta_commit));
    }
    if (step >= cfg.discriminator_warmup_steps) {
        const int logits = disc(t, recon);
        nodes.adv = scale(t, mean_all(t, logits), -1.0);  // hinge generator loss
    } else {
        static const float zero = 0.0f;
        nodes.adv = t.input(&zero, {1});
    }
    int total = add(t, nodes.rec, scale(t, nodes.per, cfg.eta_per));
    total = add(t, total, scale(t, nodes.adv, cfg.eta_adv));
    total = add(t, total, scale(t, nodes.code, cfg.eta_code));
    nodes.total = total;
    return nodes;
}

namespace {

// Sample encoder outputs over a deterministic subset of the dataset and seed
// the codebook from them (keeps early utilization healthy).
void data_init_codebook(CodecModel& model, const std::vector<std::vector<float>>& maps,
                        uint64_t seed) {
    const int64_t take = std::min<int64_t>(32, static_cast<int64_t>(maps.size()));
    std::vector<float> pool;
    const int64_t stride = std::max<int64_t>(1, static_cast<int64_t>(maps.size()) / take);
    for (int64_t i = 0; i < static_cast<int64_t>(maps.size()); i += stride) {
        LatentGrid g = codec_encode(model, maps[i]);
        pool.insert(pool.end(), g.values.begin(), g.values.end());
    }
    const int d = model.cfg.latent_dim;
    const int64_t n_vecs = static_cast<int64_t>(pool.size()) / d;
    Rng rng = Rng(seed).fork("codebook_init");
    for (int c = 0; c < model.cfg.codebook_size; ++c) {
        const int64_t pick = rng.uniform_int(n_vecs);
        for (int k = 0; k < d; ++k)
            model.codebook_param.w[static_cast<int64_t>(c) * d + k] =
                pool[pick * d + k] + static_cast<float>(rng.gaussian() * 0.01);
    }
}

}  // namespace

TrainStats train_codec(CodecModel& model, const std::vector<std::vector<float>>& maps_chw,
                       const CodecTrainConfig& cfg, Log* log) {
    cfg.validate();
    require_usage(!maps_chw.empty(), "train_codec: empty dataset");
    const int64_t map_elems =
        static_cast<int64_t>(model.cfg.in_channels) * model.cfg.resolution * model.cfg.resolution;
    for (const auto& m : maps_chw)
        require_usage(static_cast<int64_t>(m.size()) == map_elems,
                      "train_codec: inconsistent map resolution in dataset");

    Rng data_rng = Rng(cfg.seed).fork("codec_data");
    PerceptualNet perceptual(model.cfg.in_channels, cfg.perceptual_seed);
    Rng disc_rng = Rng(cfg.seed).fork("codec_disc");
    Discriminator disc(model.cfg, disc_rng);

    ParamSet gen_params;
    model.collect(gen_params);
    ParamSet disc_params;
    disc.collect(disc_params);

    Adam opt_g({.lr = cfg.lr, .beta1 = 0.5, .beta2 = 0.9});
    Adam opt_d({.lr = cfg.disc_lr, .beta1 = 0.5, .beta2 = 0.9});

    data_init_codebook(model, maps_chw, cfg.seed);

    TrainStats stats;
    double smoothed = -1.0;
    const int B = cfg.batch;

    for (int64_t step = 0; step < cfg.steps; ++step) {
        std::vector<int64_t> batch_idx(B);
        for (int i = 0; i < B; ++i)
            batch_idx[i] = data_rng.uniform_int(static_cast<int64_t>(maps_chw.size()));

        std::vector<std::unique_ptr<Tape>> tapes(B);
        std::vector<CodecLossNodes> nodes(B);
        parallel_for(B, cfg.threads, [&](int64_t i) {
            tapes[i] = std::make_unique<Tape>();
            nodes[i] = build_codec_loss(*tapes[i], model, perceptual, disc,
                                        maps_chw[batch_idx[i]].data(), step, cfg);
            tapes[i]->backward(nodes[i].total);
        });

        LossBreakdown avg;
        for (int i = 0; i < B; ++i) {
            avg.rec += (*tapes[i])[nodes[i].rec].v[0];
            avg.per += (*tapes[i])[nodes[i].per].v[0];
            avg.adv += (*tapes[i])[nodes[i].adv].v[0];
            avg.code += (*tapes[i])[nodes[i].code].v[0];
            avg.total += (*tapes[i])[nodes[i].total].v[0];
        }
        avg.rec /= B, avg.per /= B, avg.adv /= B, avg.code /= B, avg.total /= B;
        if (!std::isfinite(avg.total))
            fail_numeric("train_codec: non-finite loss at step " + std::to_string(step) +
                         " (rec=" + std::to_string(avg.rec) + " code=" + std::to_string(avg.code) +
                         ")");

        gen_params.zero_grad();
        disc_params.zero_grad();
        for (int i = 0; i < B; ++i) tapes[i]->accumulate_param_grads(1.0f / B);
        opt_g.step(gen_params);

        const bool disc_active = step >= cfg.discriminator_warmup_steps && cfg.eta_adv > 0.0;
        if (disc_active) {
            std::vector<std::vector<float>> recon_vals(B);
            for (int i = 0; i < B; ++i) {
                const auto& r = (*tapes[i])[nodes[i].recon];
                recon_vals[i].assign(r.v, r.v + numel(r.shape));
            }
            tapes.clear();  // free generator graphs before the disc pass

            std::vector<std::unique_ptr<Tape>> dtapes(B);
            std::vector<int> dlosses(B);
            parallel_for(B, cfg.threads, [&](int64_t i) {
                dtapes[i] = std::make_unique<Tape>();
                Tape& td = *dtapes[i];
                const int R = model.cfg.resolution;
                const Shape xs = {model.cfg.in_channels, R, R};
                const int xr = td.input(maps_chw[batch_idx[i]].data(), xs);
                const int xf = td.input(recon_vals[i].data(), xs);
                const int dr = disc(td, xr);
                const int df = disc(td, xf);
                // hinge: mean(relu(1 - D(real))) + mean(relu(1 + D(fake)))
                const int lr_ = mean_all(td, relu(td, add_scalar(td, scale(td, dr, -1.0), 1.0)));
                const int lf = mean_all(td, relu(td, add_scalar(td, df, 1.0)));
                dlosses[i] = scale(td, add(td, lr_, lf), 0.5);
                td.backward(dlosses[i]);
            });
            disc_params.zero_grad();
            for (int i = 0; i < B; ++i) dtapes[i]->accumulate_param_grads(1.0f / B);
            opt_d.step(disc_params);
        }

        if (step == 0) stats.first_rec = avg.rec;
        stats.last_rec = avg.rec;
        smoothed = smoothed < 0 ? avg.rec : 0.98 * smoothed + 0.02 * avg.rec;
        stats.smoothed_rec = smoothed;
        stats.steps_run = step + 1;

        if (log && (step % cfg.log_every == 0 || step + 1 == cfg.steps)) {
            char buf[256];
            std::snprintf(buf, sizeof(buf),
                          R"({"step":%lld,"rec":%.6f,"per":%.6f,"adv":%.6f,"code":%.6f,"total":%.6f})",
                          static_cast<long long>(step), avg.rec, avg.per, avg.adv, avg.code,
                          avg.total);
            log->file_line(buf);
            if (step % (cfg.log_every * 10) == 0)
                log->f("codec step %lld rec %.5f code %.5f", static_cast<long long>(step), avg.rec,
                       avg.code);
        }
    }
    if (log) log->flush();
    return stats;
}

double codebook_utilization(const CodecModel& model, const std::vector<std::vector<float>>& maps_chw,
                            int64_t max_maps) {
    Codebook book = model.codebook_view();
    std::vector<uint8_t> used(model.cfg.codebook_size, 0);
    const int64_t n = std::min<int64_t>(max_maps, static_cast<int64_t>(maps_chw.size()));
    const int64_t stride = std::max<int64_t>(1, static_cast<int64_t>(maps_chw.size()) / n);
    for (int64_t i = 0; i < static_cast<int64_t>(maps_chw.size()); i += stride) {
        LatentGrid g = codec_encode(model, maps_chw[i]);
        for (int32_t idx : nearest_indices(book, g.values)) used[idx] = 1;
    }
    int64_t count = 0;
    for (uint8_t u : used) count += u;
    return static_cast<double>(count) / static_cast<double>(model.cfg.codebook_size);
}

double reconstruction_psnr(const CodecModel& model, const std::vector<std::vector<float>>& maps_chw,
                           int64_t max_maps) {
    Codebook book = model.codebook_view();
    const int64_t n = std::min<int64_t>(max_maps, static_cast<int64_t>(maps_chw.size()));
    const int64_t stride = std::max<int64_t>(1, static_cast<int64_t>(maps_chw.size()) / n);
    std::vector<std::vector<double>> preds, refs;
    for (int64_t i = 0; i < static_cast<int64_t>(maps_chw.size()); i += stride) {
        LatentGrid g = codec_encode(model, maps_chw[i]);
        LatentGrid q = quantize(g, book);
        std::vector<float> recon = codec_decode(model, q);
        std::vector<double> p(recon.size()), r(recon.size());
        for (size_t k = 0; k < recon.size(); ++k) {
            p[k] = (static_cast<double>(recon[k]) + 1.0) * 0.5;  // [-1,1] -> [0,1]
            r[k] = (static_cast<double>(maps_chw[i][k]) + 1.0) * 0.5;
        }
        preds.push_back(std::move(p));
        refs.push_back(std::move(r));
    }
    std::vector<const double*> pp, rp;
    for (auto& p : preds) pp.push_back(p.data());
    for (auto& r : refs) rp.push_back(r.data());
    return metrics::psnr(pp, rp, static_cast<int64_t>(preds[0].size())).db;
}

void save_codec_checkpoint(const std::string& path, const CodecModel& model,
                           const std::string& stream, double norm_scale, int64_t step,
                           const std::string& config_hash) {
    Archive a;
    a.kind = "codec";
    a.config_hash = config_hash;
    a.step = step;
    a.meta["stream"] = stream;
    a.meta["norm_scale"] = norm_scale;
    a.meta["model"] = {{"resolution", model.cfg.resolution},
                       {"in_channels", model.cfg.in_channels},
                       {"latent_dim", model.cfg.latent_dim},
                       {"codebook_size", model.cfg.codebook_size},
                       {"channels", model.cfg.channels}};
    ParamSet ps;
    const_cast<CodecModel&>(model).collect(ps);
    for (const Param* p : ps.items)
        a.add(p->name, std::vector<int64_t>(p->shape.begin(), p->shape.end()), p->w);
    save_archive(a, path);
}

LoadedCodec load_codec_checkpoint(const std::string& path) {
    Archive a = load_archive(path);
    if (a.kind != "codec") fail_data("not a codec checkpoint: " + path);
    CodecModelConfig cfg;
    cfg.resolution = a.meta.at("model").at("resolution").get<int>();
    cfg.in_channels = a.meta.at("model").at("in_channels").get<int>();
    cfg.latent_dim = a.meta.at("model").at("latent_dim").get<int>();
    cfg.codebook_size = a.meta.at("model").at("codebook_size").get<int>();
    cfg.channels = a.meta.at("model").at("channels").get<std::vector<int>>();

    LoadedCodec out;
    Rng tmp(0);
    out.model = CodecModel(cfg, tmp);
    out.stream = a.meta.value("stream", "");
    out.norm_scale = a.meta.value("norm_scale", 1.0);
    out.step = a.step;
    out.config_hash = a.config_hash;

    ParamSet ps;
    out.model.collect(ps);
    for (Param* p : ps.items) {
        const ArchiveTensor& t = a.tensor(p->name);
        require_data(t.data.size() == p->w.size(), "codec checkpoint tensor size mismatch: " + p->name);
        p->w = t.data;
    }
    return out;
}

}  // namespace talkie::codec

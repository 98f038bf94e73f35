#include "codec/model.h"

#include "core/error.h"

namespace talkie::codec {

using namespace talkie::nn;

void CodecModelConfig::validate() const {
    require_usage(channels.size() >= 2, "codec: channel list needs conv_in plus stages");
    require_usage(resolution % (1 << stages()) == 0,
                  "codec: resolution not divisible by the downsampling factor");
    require_usage(latent_side() >= 1, "codec: too many stages for this resolution");
    require_usage(latent_dim >= 1 && codebook_size >= 2, "codec: bad latent/codebook size");
}

ResBlock::ResBlock(const std::string& name, int ch, talkie::Rng& rng)
    : n1(name + ".n1", ch, norm_groups_for(ch)),
      n2(name + ".n2", ch, norm_groups_for(ch)),
      c1(name + ".c1", ch, ch, 3, 1, 1, rng),
      c2(name + ".c2", ch, ch, 3, 1, 1, rng) {}

int ResBlock::operator()(Tape& t, int x) const {
    int h = c1(t, silu(t, n1(t, x)));
    h = c2(t, silu(t, n2(t, h)));
    return add(t, x, h);
}

void ResBlock::collect(ParamSet& ps) {
    n1.collect(ps);
    n2.collect(ps);
    c1.collect(ps);
    c2.collect(ps);
}

Encoder::Encoder(const CodecModelConfig& cfg, talkie::Rng& rng) {
    conv_in = Conv2d("enc.in", cfg.in_channels, cfg.channels[0], 3, 1, 1, rng);
    for (int s = 0; s < cfg.stages(); ++s) {
        downs.emplace_back("enc.down" + std::to_string(s), cfg.channels[s], cfg.channels[s + 1], 3,
                           2, 1, rng);
        down_norms.emplace_back("enc.dn" + std::to_string(s), cfg.channels[s + 1],
                                norm_groups_for(cfg.channels[s + 1]));
    }
    const int cb = cfg.channels.back();
    mid1 = ResBlock("enc.mid1", cb, rng);
    mid2 = ResBlock("enc.mid2", cb, rng);
    norm_out = GroupNormLayer("enc.out_norm", cb, norm_groups_for(cb));
    conv_out = Conv2d("enc.out", cb, cfg.latent_dim, 1, 1, 0, rng);
}

int Encoder::operator()(Tape& t, int x) const {
    int h = conv_in(t, x);
    for (size_t s = 0; s < downs.size(); ++s) h = silu(t, down_norms[s](t, downs[s](t, h)));
    h = mid1(t, h);
    h = mid2(t, h);
    return conv_out(t, silu(t, norm_out(t, h)));
}

void Encoder::collect(ParamSet& ps) {
    conv_in.collect(ps);
    for (auto& d : downs) d.collect(ps);
    for (auto& n : down_norms) n.collect(ps);
    mid1.collect(ps);
    mid2.collect(ps);
    norm_out.collect(ps);
    conv_out.collect(ps);
}

Decoder::Decoder(const CodecModelConfig& cfg, talkie::Rng& rng) {
    const int cb = cfg.channels.back();
    conv_in = Conv2d("dec.in", cfg.latent_dim, cb, 1, 1, 0, rng);
    mid1 = ResBlock("dec.mid1", cb, rng);
    mid2 = ResBlock("dec.mid2", cb, rng);
    for (int s = cfg.stages() - 1; s >= 0; --s) {
        ups.emplace_back("dec.up" + std::to_string(s), cfg.channels[s + 1], cfg.channels[s], 3, 1,
                         1, rng);
        up_norms.emplace_back("dec.un" + std::to_string(s), cfg.channels[s],
                              norm_groups_for(cfg.channels[s]));
    }
    norm_out = GroupNormLayer("dec.out_norm", cfg.channels[0], norm_groups_for(cfg.channels[0]));
    conv_out = Conv2d("dec.out", cfg.channels[0], cfg.in_channels, 3, 1, 1, rng);
}

int Decoder::operator()(Tape& t, int z) const {
    int h = conv_in(t, z);
    h = mid1(t, h);
    h = mid2(t, h);
    for (size_t s = 0; s < ups.size(); ++s)
        h = silu(t, up_norms[s](t, ups[s](t, upsample_nearest2(t, h))));
    return conv_out(t, silu(t, norm_out(t, h)));
}

void Decoder::collect(ParamSet& ps) {
    conv_in.collect(ps);
    mid1.collect(ps);
    mid2.collect(ps);
    for (auto& u : ups) u.collect(ps);
    for (auto& n : up_norms) n.collect(ps);
    norm_out.collect(ps);
    conv_out.collect(ps);
}

Discriminator::Discriminator(const CodecModelConfig& cfg, talkie::Rng& rng) {
    convs.emplace_back("disc.c0", cfg.in_channels, 16, 3, 2, 1, rng);
    convs.emplace_back("disc.c1", 16, 32, 3, 2, 1, rng);
    convs.emplace_back("disc.c2", 32, 32, 3, 2, 1, rng);
    convs.emplace_back("disc.out", 32, 1, 1, 1, 0, rng);
}

int Discriminator::operator()(Tape& t, int x) const {
    int h = x;
    for (size_t i = 0; i + 1 < convs.size(); ++i) h = leaky_relu(t, convs[i](t, h), 0.2);
    return convs.back()(t, h);
}

void Discriminator::collect(ParamSet& ps) {
    for (auto& c : convs) c.collect(ps);
}

PerceptualNet::PerceptualNet(int in_channels, uint64_t seed) {
    talkie::Rng rng(seed);
    convs.emplace_back("per.c0", in_channels, 8, 3, 2, 1, rng, 1.4);
    convs.emplace_back("per.c1", 8, 16, 3, 2, 1, rng, 1.4);
    convs.emplace_back("per.c2", 16, 16, 3, 2, 1, rng, 1.4);
    for (auto& c : convs) {
        c.w.trainable = false;
        c.b.trainable = false;
    }
}

int PerceptualNet::distance(Tape& t, int a, int b) const {
    int fa = a, fb = b, acc = -1;
    for (const auto& c : convs) {
        fa = leaky_relu(t, c(t, fa), 0.2);
        fb = leaky_relu(t, c(t, fb), 0.2);
        const int d = mse(t, fa, fb);
        acc = acc < 0 ? d : add(t, acc, d);
    }
    return scale(t, acc, 1.0 / static_cast<double>(convs.size()));
}

void PerceptualNet::collect(ParamSet& ps) {
    for (auto& c : convs) c.collect(ps);
}

CodecModel::CodecModel(const CodecModelConfig& cfg_, talkie::Rng& rng) : cfg(cfg_) {
    cfg.validate();
    encoder = Encoder(cfg, rng);
    decoder = Decoder(cfg, rng);
    codebook_param = make_param_normal("codebook", {cfg.codebook_size, cfg.latent_dim}, rng, 0.5);
}

Codebook CodecModel::codebook_view() const {
    Codebook b;
    b.size = cfg.codebook_size;
    b.dim = cfg.latent_dim;
    b.entries = codebook_param.w;
    return b;
}

void CodecModel::collect(ParamSet& ps) {
    encoder.collect(ps);
    decoder.collect(ps);
    ps.add(codebook_param);
}

LatentGrid codec_encode(const CodecModel& model, const std::vector<float>& map_chw) {
    require_usage(static_cast<int64_t>(map_chw.size()) ==
                      static_cast<int64_t>(model.cfg.in_channels) * model.cfg.resolution *
                          model.cfg.resolution,
                  "codec_encode: map size does not match model resolution");
    Tape t;
    const int x = t.input(map_chw.data(),
                          {model.cfg.in_channels, model.cfg.resolution, model.cfg.resolution});
    const int z = model.encoder(t, x);
    const int cells = chw_to_rows(t, z);
    LatentGrid out;
    out.h = model.cfg.latent_side();
    out.w = model.cfg.latent_side();
    out.d = model.cfg.latent_dim;
    out.values.assign(t[cells].v, t[cells].v + numel(t[cells].shape));
    return out;
}

std::vector<float> codec_decode(const CodecModel& model, const LatentGrid& quantized) {
    require_usage(quantized.quantized, "codec_decode: latent grid must be quantized");
    require_usage(quantized.h == model.cfg.latent_side() && quantized.w == model.cfg.latent_side() &&
                      quantized.d == model.cfg.latent_dim,
                  "codec_decode: latent grid shape mismatch");
    Tape t;
    const int cells =
        t.input(quantized.values.data(), {quantized.h * quantized.w, quantized.d});
    const int z = rows_to_chw(t, cells, quantized.h, quantized.w);
    const int y = model.decoder(t, z);
    return std::vector<float>(t[y].v, t[y].v + numel(t[y].shape));
}

std::vector<float> hwc_to_chw(const std::vector<float>& hwc, int h, int w, int c) {
    std::vector<float> out(hwc.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch)
                out[(static_cast<int64_t>(ch) * h + y) * w + x] =
                    hwc[(static_cast<int64_t>(y) * w + x) * c + ch];
    return out;
}

std::vector<float> chw_to_hwc(const std::vector<float>& chw, int c, int h, int w) {
    std::vector<float> out(chw.size());
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out[(static_cast<int64_t>(y) * w + x) * c + ch] =
                    chw[(static_cast<int64_t>(ch) * h + y) * w + x];
    return out;
}

}  // namespace talkie::codec

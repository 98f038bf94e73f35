#pragma once

#include <string>
#include <vector>

#include "codec/codebook.h"
#include "nn/layers.h"

namespace talkie::codec {

// Architecture of one quantized autoencoder (motion or wrinkle stream share
// the code but never parameters). Resolution must divide by 2^(#channels-1);
// the channel list covers conv_in plus each downsampling stage.
struct CodecModelConfig {
    int resolution = 64;
    int in_channels = 3;
    int latent_dim = 8;
    int codebook_size = 128;
    std::vector<int> channels = {12, 16, 24, 32, 48};

    int stages() const { return static_cast<int>(channels.size()) - 1; }
    int latent_side() const { return resolution >> stages(); }
    void validate() const;
};

struct ResBlock {
    nn::GroupNormLayer n1, n2;
    nn::Conv2d c1, c2;

    ResBlock() = default;
    ResBlock(const std::string& name, int ch, talkie::Rng& rng);
    int operator()(nn::Tape& t, int x) const;
    void collect(nn::ParamSet& ps);
};

struct Encoder {
    nn::Conv2d conv_in;
    std::vector<nn::Conv2d> downs;
    std::vector<nn::GroupNormLayer> down_norms;
    ResBlock mid1, mid2;
    nn::GroupNormLayer norm_out;
    nn::Conv2d conv_out;

    Encoder() = default;
    Encoder(const CodecModelConfig& cfg, talkie::Rng& rng);
    int operator()(nn::Tape& t, int x) const;  // [Cin,R,R] -> [d, r, r]
    void collect(nn::ParamSet& ps);
};

struct Decoder {
    nn::Conv2d conv_in;
    ResBlock mid1, mid2;
    std::vector<nn::Conv2d> ups;
    std::vector<nn::GroupNormLayer> up_norms;
    nn::GroupNormLayer norm_out;
    nn::Conv2d conv_out;

    Decoder() = default;
    Decoder(const CodecModelConfig& cfg, talkie::Rng& rng);
    int operator()(nn::Tape& t, int z) const;  // [d, r, r] -> [Cin,R,R]
    void collect(nn::ParamSet& ps);
};

// Patch discriminator: conv stack with stride 2, per-patch logits.
struct Discriminator {
    std::vector<nn::Conv2d> convs;

    Discriminator() = default;
    Discriminator(const CodecModelConfig& cfg, talkie::Rng& rng);
    int operator()(nn::Tape& t, int x) const;
    void collect(nn::ParamSet& ps);
};

// Fixed, randomly initialized multi-scale feature stack (frozen) behind the
// pluggable perceptual-distance interface.
struct PerceptualNet {
    std::vector<nn::Conv2d> convs;

    PerceptualNet() = default;
    PerceptualNet(int in_channels, uint64_t seed);
    // mean-squared multi-scale feature distance between two [C,H,W] nodes
    int distance(nn::Tape& t, int a, int b) const;
    void collect(nn::ParamSet& ps);  // frozen params (trainable = false)
};

struct CodecModel {
    CodecModelConfig cfg;
    Encoder encoder;
    Decoder decoder;
    nn::Param codebook_param;  // [C, d]

    CodecModel() = default;
    CodecModel(const CodecModelConfig& cfg, talkie::Rng& rng);

    Codebook codebook_view() const;
    void collect(nn::ParamSet& ps);  // encoder + decoder + codebook
};

// Deterministic evaluation-mode paths (no gradients kept).
LatentGrid codec_encode(const CodecModel& model, const std::vector<float>& map_chw);
std::vector<float> codec_decode(const CodecModel& model, const LatentGrid& quantized);

std::vector<float> hwc_to_chw(const std::vector<float>& hwc, int h, int w, int c);
std::vector<float> chw_to_hwc(const std::vector<float>& chw, int c, int h, int w);

}  // namespace talkie::codec

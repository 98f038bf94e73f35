#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codec/model.h"
#include "core/log.h"

namespace talkie::codec {

struct CodecTrainConfig {
    double eta_per = 1.0;
    double eta_adv = 0.2;
    double eta_code = 1.0;
    double beta_commit = 0.25;
    int64_t discriminator_warmup_steps = 800;
    double lr = 1e-3;
    double disc_lr = 1e-3;
    int batch = 4;
    int64_t steps = 5000;
    uint64_t seed = 1;
    int threads = 2;
    int64_t log_every = 100;
    uint64_t perceptual_seed = 99;

    void validate() const;
};

struct LossBreakdown {
    double rec = 0, per = 0, adv = 0, code = 0, total = 0;
};

// Generator-side loss graph for one map. The breakdown follows
//   total = rec + eta_per*per + eta_adv*adv + eta_code*code
// with the adversarial term forced to zero before the discriminator warmup.
struct CodecLossNodes {
    int rec = -1, per = -1, adv = -1, code = -1, total = -1;
    int recon = -1;  // decoder output node
    std::vector<int> indices;
};
CodecLossNodes build_codec_loss(nn::Tape& t, const CodecModel& model,
                                const PerceptualNet& perceptual, const Discriminator& disc,
                                const float* map_chw, int64_t step, const CodecTrainConfig& cfg);

// Codebook + commitment term on a latent-cells node ([N,d]):
//   ||sg[z] - zq||^2 + beta ||z - sg[zq]||^2, means over elements.
int vq_code_loss(nn::Tape& t, int z_cells, nn::Param& codebook, const std::vector<int>& indices,
                 double beta);

// Trains model (and a discriminator) on normalized maps ([-1,1] domain, CHW).
// Data order is driven by the seed and is independent of thread count; the
// run aborts with a numeric error if the loss goes non-finite.
struct TrainStats {
    double first_rec = 0, last_rec = 0;
    double smoothed_rec = 0;
    int64_t steps_run = 0;
};
TrainStats train_codec(CodecModel& model, const std::vector<std::vector<float>>& maps_chw,
                       const CodecTrainConfig& cfg, Log* log);

// Fraction of codebook entries used when quantizing `maps_chw` (subsampled).
double codebook_utilization(const CodecModel& model, const std::vector<std::vector<float>>& maps_chw,
                            int64_t max_maps = 256);

// Mean reconstruction PSNR (dB) with the [-1,1] model domain mapped onto [0,1].
double reconstruction_psnr(const CodecModel& model, const std::vector<std::vector<float>>& maps_chw,
                           int64_t max_maps = 64);

// Checkpoint I/O. The archive embeds the model config, stream tag, dataset
// normalization scale, step counter, config hash and the raw codebook.
void save_codec_checkpoint(const std::string& path, const CodecModel& model,
                           const std::string& stream, double norm_scale, int64_t step,
                           const std::string& config_hash);

struct LoadedCodec {
    CodecModel model;
    std::string stream;
    double norm_scale = 1.0;
    int64_t step = 0;
    std::string config_hash;
};
LoadedCodec load_codec_checkpoint(const std::string& path);

}  // namespace talkie::codec

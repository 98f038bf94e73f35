#pragma once

#include <map>
#include <string>
#include <vector>

#include "audio/features.h"
#include "codec/trainer.h"
#include "core/config.h"
#include "geometry/raster.h"
#include "synthdata/corpus.h"

namespace talkie::pipeline {

// One frame of vertex offsets -> normalized motion map in the codec's [-1,1]
// domain, channel-first.
std::vector<float> motion_frame_to_map(const geo::MeshTopology& topo, const float* offsets,
                                       int64_t vertex_count, int resolution, double scale);

// Wrinkle map frame (HWC in (0,1)) -> [-1,1] channel-first.
std::vector<float> wrinkle_frame_to_map(const float* hwc, int resolution);

// Every frame of a split as normalized CHW maps (codec training food).
std::vector<std::vector<float>> load_split_maps(const synthdata::DatasetManifest& m,
                                                const geo::MeshTopology& topo,
                                                const std::string& split,
                                                const std::string& stream);

struct EncodedSequence {
    const synthdata::SequenceEntry* entry = nullptr;
    int64_t frames = 0;
    int latent_dim = 0;           // flattened per-frame latent size
    std::vector<float> latents;   // frames x latent_dim, continuous
};

// Continuous per-frame latents of one stream for every sequence in a split.
std::vector<EncodedSequence> encode_split(const synthdata::DatasetManifest& m,
                                          const geo::MeshTopology& topo,
                                          const codec::CodecModel& model, double motion_scale,
                                          const std::string& split, const std::string& stream);

// Mean latent per identity over a set of encoded sequences.
std::map<std::string, std::vector<float>> identity_pivots(const std::vector<EncodedSequence>& seqs);

// Log-mel features aligned to a sequence's frame count.
std::vector<float> aligned_audio_for(const synthdata::DatasetManifest& m,
                                     const synthdata::SequenceEntry& seq,
                                     const audio::LogMelConfig& mel_cfg);

audio::LogMelConfig mel_config_from(const Config& cfg);

}  // namespace talkie::pipeline

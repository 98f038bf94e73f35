#include "pipeline/dataset.h"

#include <cmath>

#include "audio/wav.h"
#include "core/error.h"
#include "core/narray.h"

namespace talkie::pipeline {

std::vector<float> motion_frame_to_map(const geo::MeshTopology& topo, const float* offsets,
                                       int64_t vertex_count, int resolution, double scale) {
    require_usage(vertex_count == topo.vertex_count, "motion frame does not match topology");
    std::vector<float> frame(offsets, offsets + vertex_count * 3);
    geo::RasterField map = geo::uv_rasterize_offsets(topo, frame, resolution);
    const float inv = static_cast<float>(1.0 / scale);
    for (auto& v : map.texels) v *= inv;
    return codec::hwc_to_chw(map.texels, resolution, resolution, 3);
}

std::vector<float> wrinkle_frame_to_map(const float* hwc, int resolution) {
    std::vector<float> shifted(static_cast<size_t>(resolution) * resolution * 3);
    for (size_t i = 0; i < shifted.size(); ++i) shifted[i] = hwc[i] * 2.0f - 1.0f;
    return codec::hwc_to_chw(shifted, resolution, resolution, 3);
}

std::vector<std::vector<float>> load_split_maps(const synthdata::DatasetManifest& m,
                                                const geo::MeshTopology& topo,
                                                const std::string& split,
                                                const std::string& stream) {
    require_usage(stream == "motion" || stream == "wrinkle",
                  "stream must be motion or wrinkle, got " + stream);
    std::vector<std::vector<float>> maps;
    for (const auto* seq : m.split(split)) {
        NamedArray a = load_array(m.path(seq->dir + "/" + stream));
        if (stream == "motion") {
            require_data(a.shape.size() == 3 && a.shape[0] == seq->frames,
                         "bad motion array for " + seq->name);
            for (int64_t t = 0; t < seq->frames; ++t)
                maps.push_back(motion_frame_to_map(topo, a.ptr() + t * a.shape[1] * 3, a.shape[1],
                                                   m.resolution, m.motion_scale));
        } else {
            require_data(a.shape.size() == 4 && a.shape[0] == seq->frames &&
                             a.shape[1] == m.resolution,
                         "bad wrinkle array for " + seq->name);
            const int64_t stride = static_cast<int64_t>(m.resolution) * m.resolution * 3;
            for (int64_t t = 0; t < seq->frames; ++t)
                maps.push_back(wrinkle_frame_to_map(a.ptr() + t * stride, m.resolution));
        }
    }
    require_data(!maps.empty(), "split '" + split + "' has no frames");
    return maps;
}

std::vector<EncodedSequence> encode_split(const synthdata::DatasetManifest& m,
                                          const geo::MeshTopology& topo,
                                          const codec::CodecModel& model, double motion_scale,
                                          const std::string& split, const std::string& stream) {
    std::vector<EncodedSequence> out;
    const int lat_dim =
        model.cfg.latent_side() * model.cfg.latent_side() * model.cfg.latent_dim;
    for (const auto* seq : m.split(split)) {
        NamedArray a = load_array(m.path(seq->dir + "/" + stream));
        EncodedSequence es;
        es.entry = seq;
        es.frames = seq->frames;
        es.latent_dim = lat_dim;
        es.latents.resize(static_cast<size_t>(seq->frames) * lat_dim);
        const int64_t px_stride = static_cast<int64_t>(m.resolution) * m.resolution * 3;
        for (int64_t t = 0; t < seq->frames; ++t) {
            std::vector<float> chw =
                stream == "motion"
                    ? motion_frame_to_map(topo, a.ptr() + t * a.shape[1] * 3, a.shape[1],
                                          m.resolution, motion_scale)
                    : wrinkle_frame_to_map(a.ptr() + t * px_stride, m.resolution);
            codec::LatentGrid z = codec::codec_encode(model, chw);
            std::copy(z.values.begin(), z.values.end(), es.latents.begin() + t * lat_dim);
        }
        out.push_back(std::move(es));
    }
    return out;
}

std::map<std::string, std::vector<float>> identity_pivots(const std::vector<EncodedSequence>& seqs) {
    std::map<std::string, std::pair<std::vector<double>, int64_t>> acc;
    for (const auto& s : seqs) {
        auto& [sum, count] = acc[s.entry->identity];
        if (sum.empty()) sum.assign(s.latent_dim, 0.0);
        for (int64_t t = 0; t < s.frames; ++t)
            for (int k = 0; k < s.latent_dim; ++k) sum[k] += s.latents[t * s.latent_dim + k];
        count += s.frames;
    }
    std::map<std::string, std::vector<float>> out;
    for (auto& [id, sc] : acc) {
        std::vector<float> p(sc.first.size());
        for (size_t k = 0; k < p.size(); ++k)
            p[k] = static_cast<float>(sc.first[k] / static_cast<double>(sc.second));
        out[id] = std::move(p);
    }
    return out;
}

std::vector<float> aligned_audio_for(const synthdata::DatasetManifest& m,
                                     const synthdata::SequenceEntry& seq,
                                     const audio::LogMelConfig& mel_cfg) {
    const audio::AudioClip clip = audio::load_wav(m.path(seq.dir + "/audio.wav"));
    audio::LogMelExtractor mel(mel_cfg);
    return audio::align_features(mel.extract(clip), seq.frames);
}

audio::LogMelConfig mel_config_from(const Config& cfg) {
    audio::LogMelConfig mc;
    mc.sample_rate = cfg.get<int>("audio.sample_rate", 16000);
    mc.bands = cfg.get<int>("audio.bands", 80);
    mc.window_ms = cfg.get<double>("audio.window_ms", 25.0);
    mc.hop_ms = cfg.get<double>("audio.hop_ms", 10.0);
    return mc;
}

}  // namespace talkie::pipeline

#pragma once

#include <string>
#include <vector>

#include "core/log.h"
#include "synthdata/oracle.h"

namespace talkie::synthdata {

struct CorpusConfig {
    int identities = 6;
    double seconds_per_identity = 30.0;
    double fps = 25.0;
    int resolution = 64;
    int sequences_per_identity = 5;
    int sample_rate = 16000;
    uint64_t seed = 7;

    void validate() const;
};

struct SequenceEntry {
    std::string name;       // seq_<id>_<n>
    std::string identity;   // id<k>
    int64_t frames = 0;
    double fps = 0.0;
    std::string split;      // train | val | test-A | test-B
    std::string dir;        // relative to the corpus root
};

struct IdentityEntry {
    std::string name;
    int index = 0;
    double alpha = 0.0;
    double wrinkle_gain = 0.0;
    double blink_period = 0.0;
};

struct DatasetManifest {
    std::string root;            // directory holding manifest.json
    std::string topology_path;   // relative
    double fps = 0.0;
    int resolution = 0;
    double motion_scale = 1.0;   // normalization scale for motion maps
    uint64_t seed = 0;
    std::vector<IdentityEntry> identities;
    std::vector<SequenceEntry> sequences;

    // test-A identities must be seen in train; test-B identities must not be.
    void validate() const;

    std::vector<const SequenceEntry*> split(const std::string& tag) const;
    const IdentityEntry& identity(const std::string& name) const;
    std::string path(const std::string& rel) const;
};

// Writes topology, per-sequence WAV + motion + wrinkle arrays + track files
// and manifest.json under `out_dir`. Fully reproducible per seed. Layout:
//   manifest.json, topology.tt4d, seq_<id>_<n>/{audio.wav, motion.*, wrinkle.*, track.json}
DatasetManifest generate_corpus(const CorpusConfig& cfg, const std::string& out_dir, Log* log);

DatasetManifest load_manifest(const std::string& dir_or_file);

// Track file round-trip (track.json inside a sequence directory).
void save_track(const PhonemeTrack& track, double fps, const std::string& path);
PhonemeTrack load_track(const std::string& path, double* fps_out = nullptr);

// Deterministic reconstruction of the style used for an identity index.
IdentityStyle corpus_identity_style(const DatasetManifest& m, const geo::MeshTopology& topo,
                                    int index);

}  // namespace talkie::synthdata

#include "synthdata/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "core/error.h"
#include "core/narray.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace talkie::synthdata {

void CorpusConfig::validate() const {
    require_usage(identities >= 4, "corpus: need at least 4 identities to populate all splits");
    require_usage(seconds_per_identity > 0 && fps > 0, "corpus: bad duration or fps");
    require_usage(resolution >= 16, "corpus: resolution too small");
    require_usage(sequences_per_identity >= 2, "corpus: need at least 2 sequences per identity");
}

void DatasetManifest::validate() const {
    std::set<std::string> train_ids, testa_ids, testb_ids;
    for (const auto& s : sequences) {
        if (s.split == "train") train_ids.insert(s.identity);
        else if (s.split == "test-A") testa_ids.insert(s.identity);
        else if (s.split == "test-B") testb_ids.insert(s.identity);
        else require_data(s.split == "val", "manifest: unknown split tag " + s.split);
    }
    for (const auto& id : testa_ids)
        require_data(train_ids.count(id) == 1, "manifest: test-A identity not in train: " + id);
    for (const auto& id : testb_ids)
        require_data(train_ids.count(id) == 0, "manifest: test-B identity leaks into train: " + id);
    require_data(motion_scale > 0, "manifest: motion scale must be positive");
}

std::vector<const SequenceEntry*> DatasetManifest::split(const std::string& tag) const {
    std::vector<const SequenceEntry*> out;
    for (const auto& s : sequences)
        if (s.split == tag) out.push_back(&s);
    return out;
}

const IdentityEntry& DatasetManifest::identity(const std::string& name) const {
    for (const auto& i : identities)
        if (i.name == name) return i;
    fail_data("manifest: unknown identity " + name);
}

std::string DatasetManifest::path(const std::string& rel) const {
    return (fs::path(root) / rel).string();
}

void save_track(const PhonemeTrack& track, double fps, const std::string& path) {
    nlohmann::json j;
    j["fps"] = fps;
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : track.segments) segs.push_back({s.phoneme, s.frames});
    j["segments"] = segs;
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail_data("cannot write track: " + path);
    out << j.dump(2) << "\n";
}

PhonemeTrack load_track(const std::string& path, double* fps_out) {
    std::ifstream in(path);
    if (!in) fail_data("cannot open track: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail_data("bad track file " + path + ": " + e.what());
    }
    if (fps_out) *fps_out = j.value("fps", 0.0);
    PhonemeTrack t;
    for (const auto& s : j.at("segments"))
        t.segments.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
    t.validate();
    return t;
}

namespace {

std::string split_for(int identity, int total_identities, int seq_index, int seqs_per_identity) {
    const int n_train_ids = total_identities - 2;
    if (identity >= n_train_ids) return "test-B";
    if (seq_index < seqs_per_identity - 1) return "train";
    // the held-out script of each seen identity: test-A for the first two,
    // val for the rest
    return identity < 2 ? "test-A" : "val";
}

}  // namespace

DatasetManifest generate_corpus(const CorpusConfig& cfg, const std::string& out_dir, Log* log) {
    cfg.validate();
    fs::create_directories(out_dir);

    const geo::MeshTopology topo = make_face_topology();
    geo::save_topology(topo, (fs::path(out_dir) / "topology.tt4d").string());

    DatasetManifest m;
    m.root = out_dir;
    m.topology_path = "topology.tt4d";
    m.fps = cfg.fps;
    m.resolution = cfg.resolution;
    m.seed = cfg.seed;

    const auto frames_per_seq = static_cast<int64_t>(
        std::llround(cfg.seconds_per_identity * cfg.fps / cfg.sequences_per_identity));

    std::vector<IdentityStyle> styles;
    for (int i = 0; i < cfg.identities; ++i) {
        styles.push_back(make_identity_style(topo, cfg.resolution, cfg.seed, i, cfg.identities));
        m.identities.push_back({styles.back().name, i, styles.back().alpha,
                                styles.back().wrinkle_gain, styles.back().blink_period});
    }

    double max_abs_motion = 0.0;
    for (int i = 0; i < cfg.identities; ++i) {
        for (int n = 0; n < cfg.sequences_per_identity; ++n) {
            const std::string name = "seq_" + std::to_string(i) + "_" + std::to_string(n);
            const std::string dir = name;
            fs::create_directories(fs::path(out_dir) / dir);

            const uint64_t track_seed = cfg.seed * 1000003ull + i * 131ull + n;
            const PhonemeTrack track = random_track(frames_per_seq, track_seed);
            OracleOutput oracle = oracle_animate(track, styles[i], topo, cfg.resolution, cfg.fps);
            const audio::AudioClip clip = synthesize_audio(track, cfg.fps, cfg.sample_rate);

            save_track(track, cfg.fps, (fs::path(out_dir) / dir / "track.json").string());
            audio::save_wav(clip, (fs::path(out_dir) / dir / "audio.wav").string());

            NamedArray motion = make_array(
                "motion", {oracle.motion.frames, oracle.motion.vertices, 3});
            motion.data = oracle.motion.offsets;
            motion.extra["fps"] = cfg.fps;
            motion.extra["units"] = "mm";
            save_array(motion, (fs::path(out_dir) / dir / "motion").string());

            NamedArray wrinkle = make_array(
                "wrinkle", {oracle.motion.frames, cfg.resolution, cfg.resolution, 3});
            for (int64_t t = 0; t < oracle.motion.frames; ++t)
                std::copy(oracle.wrinkle_maps[t].begin(), oracle.wrinkle_maps[t].end(),
                          wrinkle.data.begin() + t * cfg.resolution * cfg.resolution * 3);
            wrinkle.extra["fps"] = cfg.fps;
            save_array(wrinkle, (fs::path(out_dir) / dir / "wrinkle").string());

            SequenceEntry e;
            e.name = name;
            e.identity = styles[i].name;
            e.frames = oracle.motion.frames;
            e.fps = cfg.fps;
            e.split = split_for(i, cfg.identities, n, cfg.sequences_per_identity);
            e.dir = dir;
            m.sequences.push_back(e);

            if (e.split == "train")
                for (float v : motion.data) max_abs_motion = std::max(max_abs_motion, std::abs((double)v));
            if (log) log->f("corpus: wrote %s (%s, %lld frames)", name.c_str(), e.split.c_str(),
                            static_cast<long long>(e.frames));
        }
    }
    m.motion_scale = std::max(1e-6, max_abs_motion);
    m.validate();

    nlohmann::json j;
    j["topology"] = m.topology_path;
    j["fps"] = m.fps;
    j["resolution"] = m.resolution;
    j["motion_scale"] = m.motion_scale;
    j["seed"] = m.seed;
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& i : m.identities)
        ids.push_back({{"name", i.name},
                       {"index", i.index},
                       {"alpha", i.alpha},
                       {"wrinkle_gain", i.wrinkle_gain},
                       {"blink_period", i.blink_period}});
    j["identities"] = ids;
    nlohmann::json seqs = nlohmann::json::array();
    for (const auto& s : m.sequences)
        seqs.push_back({{"name", s.name},
                        {"identity", s.identity},
                        {"frames", s.frames},
                        {"fps", s.fps},
                        {"split", s.split},
                        {"dir", s.dir}});
    j["sequences"] = seqs;
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::trunc);
    if (!out) fail_data("cannot write manifest under " + out_dir);
    out << j.dump(2) << "\n";
    return m;
}

DatasetManifest load_manifest(const std::string& dir_or_file) {
    fs::path p(dir_or_file);
    if (fs::is_directory(p)) p /= "manifest.json";
    std::ifstream in(p);
    if (!in) fail_data("cannot open manifest: " + p.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail_data("bad manifest " + p.string() + ": " + e.what());
    }
    DatasetManifest m;
    m.root = p.parent_path().string();
    m.topology_path = j.at("topology").get<std::string>();
    m.fps = j.at("fps").get<double>();
    m.resolution = j.at("resolution").get<int>();
    m.motion_scale = j.at("motion_scale").get<double>();
    m.seed = j.value("seed", uint64_t{0});
    for (const auto& i : j.at("identities"))
        m.identities.push_back({i.at("name").get<std::string>(), i.at("index").get<int>(),
                                i.at("alpha").get<double>(), i.at("wrinkle_gain").get<double>(),
                                i.at("blink_period").get<double>()});
    for (const auto& s : j.at("sequences")) {
        SequenceEntry e;
        e.name = s.at("name").get<std::string>();
        e.identity = s.at("identity").get<std::string>();
        e.frames = s.at("frames").get<int64_t>();
        e.fps = s.at("fps").get<double>();
        e.split = s.at("split").get<std::string>();
        e.dir = s.at("dir").get<std::string>();
        m.sequences.push_back(e);
    }
    m.validate();
    return m;
}

IdentityStyle corpus_identity_style(const DatasetManifest& m, const geo::MeshTopology& topo,
                                    int index) {
    return make_identity_style(topo, m.resolution, m.seed, index,
                               static_cast<int>(m.identities.size()));
}

}  // namespace talkie::synthdata

#include "core/archive.h"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/error.h"

namespace talkie {

namespace {
constexpr char kMagic[8] = {'T', 'L', 'K', 'C', 'K', 'P', 'T', '1'};
}

const ArchiveTensor* Archive::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

const ArchiveTensor& Archive::tensor(const std::string& name) const {
    const ArchiveTensor* t = find(name);
    if (!t) fail_data("checkpoint tensor not found: " + name);
    return *t;
}

void Archive::add(std::string name, std::vector<int64_t> shape, std::vector<float> data) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    if (n != static_cast<int64_t>(data.size()))
        fail_usage("archive tensor '" + name + "': shape/data mismatch");
    tensors.push_back({std::move(name), std::move(shape), std::move(data)});
}

void save_archive(const Archive& a, const std::string& path) {
    nlohmann::json h;
    h["kind"] = a.kind;
    h["config_hash"] = a.config_hash;
    h["step"] = a.step;
    h["meta"] = a.meta.is_null() ? nlohmann::json::object() : a.meta;
    nlohmann::json tens = nlohmann::json::array();
    int64_t offset = 0;
    for (const auto& t : a.tensors) {
        nlohmann::json e;
        e["name"] = t.name;
        e["shape"] = t.shape;
        e["offset"] = offset;
        offset += static_cast<int64_t>(t.data.size());
        tens.push_back(e);
    }
    h["tensors"] = tens;
    const std::string header = h.dump();

    std::filesystem::path p(path);
    if (!p.parent_path().empty()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_data("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    uint64_t len = header.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& t : a.tensors)
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!out) fail_data("short write to checkpoint: " + path);
}

Archive load_archive(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) fail_data("not a checkpoint file: " + path);
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    if (!in || len > (1ull << 30)) fail_data("corrupt checkpoint header: " + path);
    std::string header(len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(len));
    if (!in) fail_data("truncated checkpoint header: " + path);

    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header);
    } catch (const std::exception& e) {
        fail_data("bad checkpoint header in " + path + ": " + e.what());
    }
    Archive a;
    a.kind = h.value("kind", "");
    a.config_hash = h.value("config_hash", "");
    a.step = h.value("step", int64_t{0});
    a.meta = h.value("meta", nlohmann::json::object());
    for (const auto& e : h.at("tensors")) {
        ArchiveTensor t;
        t.name = e.at("name").get<std::string>();
        for (const auto& d : e.at("shape")) t.shape.push_back(d.get<int64_t>());
        int64_t n = 1;
        for (int64_t d : t.shape) n *= d;
        t.data.resize(static_cast<size_t>(n));
        a.tensors.push_back(std::move(t));
    }
    for (auto& t : a.tensors) {
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!in) fail_data("truncated checkpoint payload: " + path);
    }
    return a;
}

}  // namespace talkie

#include "core/narray.h"

#include <filesystem>
#include <fstream>

#include "core/error.h"

namespace fs = std::filesystem;

namespace talkie {

namespace {

std::string strip_ext(const std::string& path) {
    fs::path p(path);
    if (p.extension() == ".f32" || p.extension() == ".json") return (p.parent_path() / p.stem()).string();
    return path;
}

}  // namespace

NamedArray make_array(std::string name, std::vector<int64_t> shape, float fill) {
    NamedArray a;
    a.name = std::move(name);
    a.shape = std::move(shape);
    a.data.assign(static_cast<size_t>(a.numel()), fill);
    return a;
}

void save_array(const NamedArray& a, const std::string& base_in) {
    const std::string base = strip_ext(base_in);
    if (a.numel() != static_cast<int64_t>(a.data.size()))
        fail_usage("named array '" + a.name + "': shape does not match data size");
    fs::path dir = fs::path(base).parent_path();
    if (!dir.empty()) fs::create_directories(dir);

    {
        std::ofstream raw(base + ".f32", std::ios::binary | std::ios::trunc);
        if (!raw) fail_data("cannot write " + base + ".f32");
        raw.write(reinterpret_cast<const char*>(a.data.data()),
                  static_cast<std::streamsize>(a.data.size() * sizeof(float)));
        if (!raw) fail_data("short write to " + base + ".f32");
    }
    nlohmann::json j = a.extra;
    j["name"] = a.name;
    j["dtype"] = "f32";
    j["shape"] = a.shape;
    std::ofstream side(base + ".json", std::ios::trunc);
    if (!side) fail_data("cannot write " + base + ".json");
    side << j.dump(2) << "\n";
}

NamedArray load_array(const std::string& path) {
    const std::string base = strip_ext(path);
    std::ifstream side(base + ".json");
    if (!side) fail_data("missing sidecar " + base + ".json");
    nlohmann::json j;
    try {
        side >> j;
    } catch (const std::exception& e) {
        fail_data("bad sidecar " + base + ".json: " + e.what());
    }
    if (j.value("dtype", "") != "f32") fail_data(base + ".json: unsupported dtype (want f32)");

    NamedArray a;
    a.name = j.value("name", "");
    for (const auto& d : j.at("shape")) a.shape.push_back(d.get<int64_t>());
    a.extra = j;
    a.extra.erase("name");
    a.extra.erase("dtype");
    a.extra.erase("shape");

    std::ifstream raw(base + ".f32", std::ios::binary);
    if (!raw) fail_data("missing data file " + base + ".f32");
    raw.seekg(0, std::ios::end);
    const auto bytes = static_cast<int64_t>(raw.tellg());
    raw.seekg(0);
    if (bytes != a.numel() * static_cast<int64_t>(sizeof(float)))
        fail_data(base + ".f32: size " + std::to_string(bytes) + " does not match sidecar shape");
    a.data.resize(static_cast<size_t>(a.numel()));
    raw.read(reinterpret_cast<char*>(a.data.data()), bytes);
    if (!raw) fail_data("short read from " + base + ".f32");
    return a;
}

bool array_exists(const std::string& base_in) {
    const std::string base = strip_ext(base_in);
    return fs::exists(base + ".f32") && fs::exists(base + ".json");
}

}  // namespace talkie
